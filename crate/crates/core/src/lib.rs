//! Anticipation-aware visual feature selection for visual-inertial navigation.
//!
//! Builds expected information matrices over a short future horizon from an
//! IMU preintegration model and per-landmark vision factors, then picks the
//! features that maximize a task-driven metric under a budget.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod imu;
pub mod linalg;
pub mod metrics;
pub mod relaxation;
pub mod selection;
pub mod sim;
pub mod state;
pub mod vision;

pub use error::{Error, Result};
pub use imu::InfoMatrix;
pub use metrics::MetricKind;
pub use selection::{Problem, Selection};
