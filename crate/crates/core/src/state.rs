use nalgebra::{DVector, Vector3};

use crate::error::{Error, Result};
use crate::sim::{MeasurementLog, Trajectory};

/// Stacked `[p v b]` states over the horizon keyframes, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonState {
    data: DVector<f64>,
}

impl HorizonState {
    pub fn from_vector(data: DVector<f64>) -> Result<Self> {
        if data.len() % 9 != 0 || data.is_empty() {
            return Err(Error::Dimension(format!(
                "horizon state length {} is not a positive multiple of 9",
                data.len()
            )));
        }
        Ok(Self { data })
    }

    /// True states along the trajectory. The bias starts at zero and follows
    /// the random walk drawn in the log, `b_{k+1} = b_k - eta_k`.
    pub fn ground_truth(trajectory: &Trajectory, log: Option<&MeasurementLog>) -> Self {
        let k = trajectory.num_keyframes();
        let mut data = DVector::zeros(9 * k);
        let mut bias = Vector3::zeros();
        for f in 0..k {
            if f > 0 {
                if let Some(log) = log {
                    bias -= log.bias_walk[f - 1];
                }
            }
            data.fixed_rows_mut::<3>(9 * f).copy_from(&trajectory.positions[f]);
            data.fixed_rows_mut::<3>(9 * f + 3).copy_from(&trajectory.velocities[f]);
            data.fixed_rows_mut::<3>(9 * f + 6).copy_from(&bias);
        }
        Self { data }
    }

    pub fn num_frames(&self) -> usize {
        self.data.len() / 9
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn position(&self, frame: usize) -> Vector3<f64> {
        self.data.fixed_rows::<3>(9 * frame).into_owned()
    }

    pub fn velocity(&self, frame: usize) -> Vector3<f64> {
        self.data.fixed_rows::<3>(9 * frame + 3).into_owned()
    }

    pub fn bias(&self, frame: usize) -> Vector3<f64> {
        self.data.fixed_rows::<3>(9 * frame + 6).into_owned()
    }

    pub fn biases(&self) -> Vec<Vector3<f64>> {
        (0..self.num_frames()).map(|f| self.bias(f)).collect()
    }
}
