//! Information carried by IMU preintegration alone across the horizon, and
//! how it grows with the vision contributions of the selected features.
//!
//! Usage: `cargo run --release --example imu_information`

use vin_attention::analysis::straight_line_instance;
use vin_attention::imu::relative_min_eigenvalue;
use vin_attention::metrics::logdet;
use vin_attention::selection::greedy_select;
use vin_attention::{InfoMatrix, MetricKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = straight_line_instance(30, 1)?;
    let omega = &inst.omega_bar;
    println!(
        "horizon of {} keyframes, state dimension {}, {} IMU blocks",
        inst.trajectory.num_keyframes(),
        omega.dim(),
        inst.blocks.len()
    );
    println!(
        "prior + IMU:     logdet {:>12.4}  lambda_min {:>11.4e}  lambda_min/trace {:.3e}",
        logdet(omega.matrix())?,
        omega.min_eigenvalue(),
        relative_min_eigenvalue(omega)
    );

    let p = inst.problem(MetricKind::LogDet);
    for kappa in [1, 5, 10, 20, 30] {
        let sel = greedy_select(&p, kappa, true)?;
        let mut m = omega.matrix().clone();
        for &id in &sel.chosen {
            let d = &inst.deltas[id];
            m += &d.delta * d.track_prob;
        }
        let info = InfoMatrix::from_matrix(m)?;
        println!(
            "+ {kappa:>2} features:  logdet {:>12.4}  lambda_min {:>11.4e}  lambda_min/trace {:.3e}",
            logdet(info.matrix())?,
            info.min_eigenvalue(),
            relative_min_eigenvalue(&info)
        );
    }
    Ok(())
}
