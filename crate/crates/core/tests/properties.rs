use proptest::prelude::*;

use vin_attention::analysis::straight_line_instance;
use vin_attention::config::{circle_montecarlo, straightline_sweep, ExperimentConfig};
use vin_attention::selection::greedy_select;
use vin_attention::sim::score_to_track_prob;
use vin_attention::MetricKind;

fn subset(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn adding_features_never_lowers_either_metric(seed in 0u64..10_000, a in any::<u32>(), b in any::<u32>()) {
        let inst = straight_line_instance(10, seed).unwrap();
        let small = subset(a & b, 10);
        let large = subset(a, 10);
        for kind in [MetricKind::LogDet, MetricKind::MinEig] {
            let p = inst.problem(kind);
            let fs = p.objective(&small).unwrap();
            let fl = p.objective(&large).unwrap();
            prop_assert!(fl >= fs - 1e-9 * fs.abs().max(1.0), "{kind:?}: {fl} < {fs}");
        }
    }

    #[test]
    fn logdet_gains_shrink_on_larger_sets(seed in 0u64..10_000, a in any::<u32>(), b in any::<u32>(), e in 0usize..10) {
        let inst = straight_line_instance(10, seed).unwrap();
        let p = inst.problem(MetricKind::LogDet);
        let small: Vec<usize> = subset(a & b, 10).into_iter().filter(|&i| i != e).collect();
        let large: Vec<usize> = subset(a, 10).into_iter().filter(|&i| i != e).collect();
        let gain = |s: &[usize]| {
            let mut with = s.to_vec();
            with.push(e);
            p.objective(&with).unwrap() - p.objective(s).unwrap()
        };
        let (gs, gl) = (gain(&small), gain(&large));
        prop_assert!(gs >= gl - 1e-9 * gs.abs().max(1.0), "gain {gs} on subset < {gl} on superset");
    }

    #[test]
    fn lazy_and_naive_greedy_agree(seed in 0u64..10_000, kappa in 1usize..8) {
        let inst = straight_line_instance(12, seed).unwrap();
        for kind in [MetricKind::LogDet, MetricKind::MinEig] {
            let p = inst.problem(kind);
            let lazy = greedy_select(&p, kappa, true).unwrap();
            let naive = greedy_select(&p, kappa, false).unwrap();
            prop_assert_eq!(&lazy.chosen, &naive.chosen);
            prop_assert!(lazy.n_objective_evals <= naive.n_objective_evals);
        }
    }

    #[test]
    fn track_probability_is_monotone_and_bounded(s1 in 0.0f64..1.0, s2 in 0.0f64..1.0, floor in 0.0f64..1.0) {
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let plo = score_to_track_prob(lo, 0.0, 1.0, floor).unwrap();
        let phi = score_to_track_prob(hi, 0.0, 1.0, floor).unwrap();
        prop_assert!(plo <= phi);
        prop_assert!((floor..=1.0).contains(&plo) && (floor..=1.0).contains(&phi));
    }

    #[test]
    fn configs_round_trip_through_json(seed in any::<u64>(), kappa in 1usize..30, sigma in 0.1f64..10.0, pick in any::<bool>()) {
        let mut cfg = if pick { circle_montecarlo() } else { straightline_sweep() };
        cfg.master_seed = seed;
        cfg.kappa = kappa;
        cfg.n_landmarks = cfg.n_landmarks.max(kappa);
        cfg.pixel_sigma = sigma;
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
