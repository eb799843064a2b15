//! Submodularity diagnostics, guarantee checks, the downstream estimator and
//! the Monte Carlo harness.

pub mod audit;
pub mod estimator;
pub mod instance;
pub mod monte_carlo;
pub mod ratio;

pub use audit::{guarantee_audit, AuditReport};
pub use estimator::{estimate_state, synthesize_measurements, Estimate, EstimationErrors, Measurements};
pub use instance::{straight_line_instance, window_instance, Instance};
pub use ratio::{submodularity_ratio, RatioReport};
pub use monte_carlo::{monte_carlo, write_outputs, McOutput};
