//! Lazy versus naive greedy selection: identical picks, fewer evaluations.
//!
//! Usage: `cargo run --release --example lazy_greedy [n_candidates] [kappa]`

use vin_attention::analysis::window_instance;
use vin_attention::config::circle_montecarlo;
use vin_attention::selection::greedy_select;
use vin_attention::MetricKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(60);
    let kappa: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let cfg = circle_montecarlo();

    println!("{:<7} {:>6} {:>11} {:>11} {:>7} {:>6}", "metric", "window", "lazy evals", "naive evals", "ratio", "same");
    for window in [0, 5, 10, 15] {
        let inst = window_instance(&cfg, n, window, 42 + window as u64)?;
        for kind in [MetricKind::LogDet, MetricKind::MinEig] {
            let p = inst.problem(kind);
            let lazy = greedy_select(&p, kappa, true)?;
            let naive = greedy_select(&p, kappa, false)?;
            println!(
                "{:<7} {:>6} {:>11} {:>11} {:>7.3} {:>6}",
                kind.name(),
                window,
                lazy.n_objective_evals,
                naive.n_objective_evals,
                lazy.n_objective_evals as f64 / naive.n_objective_evals as f64,
                lazy.chosen == naive.chosen
            );
        }
    }
    Ok(())
}
