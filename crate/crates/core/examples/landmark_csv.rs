//! Writes a sampled landmark field and trajectory as CSV and reads them back.
//!
//! Usage: `cargo run --example landmark_csv [dir]`

use std::fs::File;
use std::path::PathBuf;

use vin_attention::analysis::monte_carlo::full_trajectory;
use vin_attention::config::straightline_sweep;
use vin_attention::csvio::{read_keyframes, read_landmarks, write_keyframes, write_landmarks};
use vin_attention::sim::sample_landmarks;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let cfg = straightline_sweep();
    let bounds = cfg.landmarks.aabb().expect("box field");
    let landmarks = sample_landmarks(50, bounds, cfg.landmarks.score_range(), cfg.master_seed)?;
    let trajectory = full_trajectory(&cfg)?;

    let lm_path = dir.join("landmarks.csv");
    let kf_path = dir.join("keyframes.csv");
    write_landmarks(&landmarks, File::create(&lm_path)?)?;
    write_keyframes(&trajectory, File::create(&kf_path)?)?;

    let back = read_landmarks(File::open(&lm_path)?)?;
    let keyframes = read_keyframes(File::open(&kf_path)?)?;
    println!("{} landmarks -> {} (identical: {})", landmarks.len(), lm_path.display(), back == landmarks);
    println!("{} keyframes -> {}", keyframes.len(), kf_path.display());
    Ok(())
}
