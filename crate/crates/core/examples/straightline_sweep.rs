//! Straight-line sweep over candidate counts and budgets, comparing greedy,
//! relaxation, exhaustive search and the baselines.
//!
//! Usage: `cargo run --release --example straightline_sweep [n_runs]`

use vin_attention::analysis::monte_carlo::monte_carlo;
use vin_attention::config::straightline_sweep;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = straightline_sweep();
    if let Some(n) = std::env::args().nth(1) {
        cfg.n_runs = n.parse()?;
    }
    let start = std::time::Instant::now();
    let out = monte_carlo(&cfg)?;
    println!("{} runs in {:.1} s", cfg.n_runs, start.elapsed().as_secs_f64());
    println!(
        "{:<16} {:>4} {:>5} {:>14} {:>12} {:>12}",
        "selector", "N", "kappa", "objective", "rel err [m]", "vs random"
    );
    for a in &out.aggregate {
        println!(
            "{:<16} {:>4} {:>5} {:>14.6e} {:>12.5} {:>11.1}%",
            a.selector.name(),
            a.n_landmarks,
            a.kappa,
            a.objective_mean,
            a.rel_err_mean,
            a.rel_err_vs_random_pct
        );
    }
    Ok(())
}
