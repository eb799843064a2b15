//! A landmark tracked over more frames contributes more information: the
//! difference between the full and the truncated contribution is PSD.
//!
//! Usage: `cargo run --release --example feature_geometry`

use vin_attention::analysis::window_instance;
use vin_attention::config::circle_montecarlo;
use vin_attention::linalg::sorted_eigenvalues;
use vin_attention::vision::{feature_delta, triangulability, Triangulability};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = circle_montecarlo();
    let inst = window_instance(&cfg, 12, 3, 9)?;
    println!("{:>3} {:>7} {:>13} {:>12} {:>12}", "id", "frames", "condition", "trace", "min eig gain");
    for fm in &inst.features {
        let cond = match triangulability(fm) {
            Triangulability::Ok { condition_number } => condition_number,
            Triangulability::Degenerate => f64::INFINITY,
        };
        let full = feature_delta(fm, 1.0)?;
        let frames = &fm.visible_frames;
        // Compare against the track cut one frame short, when that is still triangulable.
        let gain = match frames.len() {
            n if n > 2 => feature_delta(&fm.truncated(frames[n - 2]), 1.0)
                .map(|short| sorted_eigenvalues(&(&full.delta - &short.delta))[0])
                .unwrap_or(f64::NAN),
            _ => f64::NAN,
        };
        println!(
            "{:>3} {:>7} {:>13.3e} {:>12.4e} {:>12.3e}",
            fm.landmark_id,
            fm.n_frames(),
            cond,
            full.delta.trace(),
            gain
        );
    }
    Ok(())
}
