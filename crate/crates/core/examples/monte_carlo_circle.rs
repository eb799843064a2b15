//! Circular-loop Monte Carlo: greedy selection against a random baseline.
//!
//! Usage: `cargo run --release --example monte_carlo_circle [n_runs]`

use vin_attention::analysis::monte_carlo::monte_carlo;
use vin_attention::config::{circle_montecarlo, SelectorKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = circle_montecarlo();
    if let Some(n) = std::env::args().nth(1) {
        cfg.n_runs = n.parse()?;
    }
    let start = std::time::Instant::now();
    let out = monte_carlo(&cfg)?;
    println!(
        "{} runs, {} windows of {} s, kappa = {} ({:.1} s)",
        cfg.n_runs,
        out.n_windows,
        cfg.horizon_s,
        cfg.kappa,
        start.elapsed().as_secs_f64()
    );
    let cands: Vec<usize> = out
        .windows
        .iter()
        .filter(|w| w.run_id == 0 && w.selector == SelectorKind::Random)
        .map(|w| w.n_candidates)
        .collect();
    println!("candidates per window: {cands:?}");
    println!("{:<16} {:>14} {:>14} {:>10} {:>9}", "selector", "rel err [m]", "abs err [m]", "vs random", "diverged");
    for a in &out.aggregate {
        println!(
            "{:<16} {:>14.6} {:>14.6} {:>9.1}% {:>9}",
            a.selector.name(),
            a.rel_err_mean,
            a.abs_err_mean,
            a.rel_err_vs_random_pct,
            a.n_diverged
        );
    }
    Ok(())
}
