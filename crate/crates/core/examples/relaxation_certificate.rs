//! Convex relaxation with top-k rounding, bracketed by the exhaustive optimum:
//! `f(rounded) <= f(S*) <= f_cvx`.
//!
//! Usage: `cargo run --release --example relaxation_certificate [n_candidates]`

use vin_attention::analysis::straight_line_instance;
use vin_attention::relaxation::{posterior_certificate, solve_relaxation, RelaxationOptions};
use vin_attention::selection::{brute_force_select, greedy_select};
use vin_attention::MetricKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(12);
    let kappa = n / 2;
    let opts = RelaxationOptions::default();
    println!(
        "{:<7} {:>4} {:>13} {:>13} {:>13} {:>13} {:>10} {:>5}",
        "metric", "seed", "rounded", "greedy", "optimum", "f_cvx", "cert", "iters"
    );
    for seed in 0..5 {
        let inst = straight_line_instance(n, seed)?;
        for kind in [MetricKind::LogDet, MetricKind::MinEig] {
            let p = inst.problem(kind);
            let relaxed = solve_relaxation(&p, kappa, &opts)?;
            let greedy = greedy_select(&p, kappa, true)?;
            let best = brute_force_select(&p, kappa)?;
            println!(
                "{:<7} {:>4} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>10.2e} {:>5}",
                kind.name(),
                seed,
                relaxed.rounded.objective_value,
                greedy.objective_value,
                best.objective_value,
                relaxed.f_cvx,
                posterior_certificate(&relaxed),
                relaxed.iterations
            );
        }
    }
    Ok(())
}
