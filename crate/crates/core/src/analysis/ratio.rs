use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::metrics::assemble;
use crate::selection::{binomial, for_each_combination, Problem};

/// Largest number of `(L, E)` pairs the exact ratio will enumerate.
pub const RATIO_PAIR_LIMIT: u128 = 1_000_000;
pub const MAX_RATIO_SET: usize = 8;

/// Exact submodularity ratio of the objective with respect to a set.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    /// Infinite when every pair had a vanishing denominator.
    pub gamma: f64,
    pub witness_l: Vec<usize>,
    pub witness_e: Vec<usize>,
    pub n_pairs_checked: usize,
}

fn mask(ids: &[usize]) -> u64 {
    ids.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

struct Memo<'a> {
    problem: &'a Problem<'a>,
    values: HashMap<u64, f64>,
}

impl Memo<'_> {
    fn value(&mut self, set: u64) -> Result<f64> {
        if let Some(&v) = self.values.get(&set) {
            return Ok(v);
        }
        let ids: Vec<usize> = (0..64).filter(|&i| set & (1u64 << i) != 0).collect();
        let m = assemble(self.problem.omega_bar, self.problem.deltas, &ids)?;
        let v = crate::metrics::evaluate(self.problem.kind, &m)?;
        self.values.insert(set, v);
        Ok(v)
    }
}

/// Number of `(L, E)` pairs with `L` a subset of `s` and `E` a nonempty set
/// of at most `kappa` candidates disjoint from `L`.
pub fn ratio_pair_count(n_features: usize, set_size: usize, kappa: usize) -> u128 {
    (0..=set_size)
        .map(|l| {
            let ways_l = binomial(set_size, l);
            let ways_e: u128 = (1..=kappa).map(|e| binomial(n_features - l, e)).sum();
            ways_l * ways_e
        })
        .sum()
}

/// Minimizes `sum_e [f(L+e) - f(L)] / [f(L+E) - f(L)]` over every `L` in
/// `s` and every `E` with `1 <= |E| <= kappa`, `E` disjoint from `L`.
/// Pairs whose denominator is not positive are skipped.
pub fn submodularity_ratio(problem: &Problem, s: &[usize], kappa: usize) -> Result<RatioReport> {
    let n = problem.n_features();
    if n > 64 {
        return Err(Error::Parameter(format!("ratio enumeration supports at most 64 candidates, got {n}")));
    }
    if s.len() > MAX_RATIO_SET {
        return Err(Error::Parameter(format!(
            "ratio set has {} elements, at most {MAX_RATIO_SET} supported",
            s.len()
        )));
    }
    if kappa == 0 {
        return Err(Error::Parameter("kappa must be at least 1".into()));
    }
    if s.iter().any(|&i| i >= n) {
        return Err(Error::Parameter("ratio set references an unknown feature".into()));
    }
    let count = ratio_pair_count(n, s.len(), kappa);
    if count > RATIO_PAIR_LIMIT {
        return Err(Error::GuardExceeded {
            count,
            limit: RATIO_PAIR_LIMIT,
        });
    }

    let mut memo = Memo {
        problem,
        values: HashMap::new(),
    };
    let mut report = RatioReport {
        gamma: f64::INFINITY,
        witness_l: Vec::new(),
        witness_e: Vec::new(),
        n_pairs_checked: 0,
    };
    for l_bits in 0u32..(1u32 << s.len()) {
        let l: Vec<usize> = s
            .iter()
            .enumerate()
            .filter(|(b, _)| l_bits & (1 << b) != 0)
            .map(|(_, &id)| id)
            .collect();
        let l_mask = mask(&l);
        let f_l = memo.value(l_mask)?;
        let outside: Vec<usize> = (0..n).filter(|i| l_mask & (1u64 << i) == 0).collect();
        let singles: Vec<f64> = outside
            .iter()
            .map(|&e| memo.value(l_mask | (1u64 << e)).map(|v| v - f_l))
            .collect::<Result<_>>()?;
        let floor = 1e-12 * f_l.abs().max(1.0);
        for size in 1..=kappa.min(outside.len()) {
            for_each_combination(outside.len(), size, |pos| {
                report.n_pairs_checked += 1;
                let e_mask = pos.iter().fold(l_mask, |m, &p| m | (1u64 << outside[p]));
                let den = memo.value(e_mask)? - f_l;
                if den <= floor {
                    return Ok(());
                }
                let num: f64 = pos.iter().map(|&p| singles[p]).sum();
                let ratio = num / den;
                if ratio < report.gamma {
                    report.gamma = ratio;
                    report.witness_l = l.clone();
                    report.witness_e = pos.iter().map(|&p| outside[p]).collect();
                }
                Ok(())
            })?;
        }
    }
    Ok(report)
}

/// Re-evaluates the ratio at a single `(L, E)` pair.
pub fn ratio_at(problem: &Problem, l: &[usize], e: &[usize]) -> Result<f64> {
    let f_l = problem.objective(l)?;
    let mut num = 0.0;
    let mut union = l.to_vec();
    for &x in e {
        let mut le = l.to_vec();
        le.push(x);
        num += problem.objective(&le)? - f_l;
        union.push(x);
    }
    Ok(num / (problem.objective(&union)? - f_l))
}

/// Smallest pairwise distance-spread among the position sub-vectors of the
/// min-eigenvector of `Omega_bar + sum_{l in L} Delta_l`, minimized over all
/// `L` in `s`. A positive value means every such eigenvector has position
/// blocks that differ across frames.
pub fn eigenvector_position_spread(problem: &Problem, s: &[usize]) -> Result<f64> {
    if s.len() > MAX_RATIO_SET {
        return Err(Error::Parameter(format!("set too large for enumeration: {}", s.len())));
    }
    let frames = problem.omega_bar.dim() / 9;
    let mut worst = f64::INFINITY;
    for bits in 0u32..(1u32 << s.len()) {
        let l: Vec<usize> = s
            .iter()
            .enumerate()
            .filter(|(b, _)| bits & (1 << b) != 0)
            .map(|(_, &id)| id)
            .collect();
        let m = assemble(problem.omega_bar, problem.deltas, &l)?;
        let mu = crate::metrics::EigPair::of(&m).v_min;
        let mut spread: f64 = 0.0;
        for i in 0..frames {
            for j in i + 1..frames {
                let d = mu.fixed_rows::<3>(9 * i) - mu.fixed_rows::<3>(9 * j);
                spread = spread.max(d.norm());
            }
        }
        worst = worst.min(spread);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imu::InfoMatrix;
    use crate::metrics::MetricKind;
    use crate::vision::FeatureDelta;
    use nalgebra::{DMatrix, DVector};

    fn diag_instance(rows: &[&[f64]]) -> (InfoMatrix, Vec<FeatureDelta>) {
        let n = rows[0].len();
        let base = InfoMatrix::from_matrix(DMatrix::identity(n, n)).unwrap();
        let deltas = rows
            .iter()
            .enumerate()
            .map(|(i, r)| FeatureDelta {
                landmark_id: i,
                delta: DMatrix::from_diagonal(&DVector::from_row_slice(r)),
                track_prob: 1.0,
                n_frames: 2,
            })
            .collect();
        (base, deltas)
    }

    #[test]
    fn single_pair_ratio_is_one() {
        let (base, deltas) = diag_instance(&[&[1.0, 2.0]]);
        let p = Problem::new(&base, &deltas, MetricKind::LogDet);
        let r = submodularity_ratio(&p, &[0], 1).unwrap();
        assert_eq!(r.n_pairs_checked, 1);
        assert!((r.gamma - 1.0).abs() < 1e-12);
        assert_eq!(r.witness_e, vec![0]);
    }

    #[test]
    fn logdet_ratio_at_least_one_and_witness_reproduces() {
        let (base, deltas) = diag_instance(&[&[1.0, 0.5, 0.0], &[0.5, 1.0, 0.2], &[0.0, 0.3, 2.0], &[1.0, 1.0, 1.0]]);
        let p = Problem::new(&base, &deltas, MetricKind::LogDet);
        let r = submodularity_ratio(&p, &[0, 1], 2).unwrap();
        assert!(r.gamma >= 1.0 - 1e-9);
        let again = ratio_at(&p, &r.witness_l, &r.witness_e).unwrap();
        assert!((again - r.gamma).abs() < 1e-9);
        assert_eq!(r.n_pairs_checked as u128, ratio_pair_count(4, 2, 2));
    }

    #[test]
    fn guard_refuses_large_enumerations() {
        let row = [1.0, 1.0];
        let rows: Vec<&[f64]> = (0..40).map(|_| &row[..]).collect();
        let (base, deltas) = diag_instance(&rows);
        let p = Problem::new(&base, &deltas, MetricKind::MinEig);
        assert!(matches!(
            submodularity_ratio(&p, &[0, 1, 2, 3, 4, 5, 6, 7], 8),
            Err(Error::GuardExceeded { .. })
        ));
    }
}
