//! Combinatorial selectors: lazy and naive greedy, random, quality-ranked and
//! an exhaustive oracle for small instances.
//!
//! Feature ids are indices into the candidate delta list.

use nalgebra::DMatrix;
use rand::seq::index;

use crate::error::{Error, Result};
use crate::imu::InfoMatrix;
use crate::metrics::{diagonal_log_sum, evaluate, mineig_perturbation_bound, EigPair, MetricKind};
use crate::sim::{rng_from_seed, Landmark};
use crate::vision::FeatureDelta;

/// Maximum number of subsets the exhaustive oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Relative guard on the lazy break test so that floating-point noise in the
/// bound cannot skip a candidate that ties with the incumbent.
const LAZY_GUARD: f64 = 1e-12;

/// A selection problem `max f(Omega_bar + sum_{l in S} p_l Delta_l), |S| <= kappa`.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub omega_bar: &'a InfoMatrix,
    pub deltas: &'a [FeatureDelta],
    pub kind: MetricKind,
}

impl<'a> Problem<'a> {
    pub fn new(omega_bar: &'a InfoMatrix, deltas: &'a [FeatureDelta], kind: MetricKind) -> Self {
        Self { omega_bar, deltas, kind }
    }

    pub fn n_features(&self) -> usize {
        self.deltas.len()
    }

    pub fn with_kind(&self, kind: MetricKind) -> Problem<'a> {
        Problem { kind, ..*self }
    }

    pub fn objective(&self, subset: &[usize]) -> Result<f64> {
        crate::metrics::objective(self.kind, self.omega_bar, self.deltas, subset)
    }

    fn check_dims(&self) -> Result<()> {
        let n = self.omega_bar.dim();
        if let Some(d) = self.deltas.iter().find(|d| d.delta.nrows() != n || d.delta.ncols() != n) {
            return Err(Error::Dimension(format!(
                "delta for landmark {} has dimension {}, expected {n}",
                d.landmark_id,
                d.delta.nrows()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMethod {
    Greedy { kind: MetricKind, lazy: bool },
    Random,
    Quality,
    BruteForce(MetricKind),
    RelaxedRounded(MetricKind),
}

impl std::fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectionMethod::Greedy { kind, lazy: true } => write!(f, "greedy-{kind}"),
            SelectionMethod::Greedy { kind, lazy: false } => write!(f, "naive-greedy-{kind}"),
            SelectionMethod::Random => f.write_str("random"),
            SelectionMethod::Quality => f.write_str("quality"),
            SelectionMethod::BruteForce(kind) => write!(f, "brute-{kind}"),
            SelectionMethod::RelaxedRounded(kind) => write!(f, "relaxed-rounded-{kind}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub chosen: Vec<usize>,
    pub objective_value: f64,
    /// Gain of each chosen feature at the moment it was added (in `chosen` order).
    pub marginal_gains: Vec<f64>,
    pub n_objective_evals: usize,
    pub method: SelectionMethod,
    /// Set when the budget exceeded the number of candidates.
    pub short_budget: bool,
}

impl Selection {
    /// Scores a fixed ordered id list, recording gains in list order.
    pub fn evaluate(problem: &Problem, chosen: Vec<usize>, method: SelectionMethod) -> Result<Selection> {
        let mut seen = vec![false; problem.n_features()];
        for &id in &chosen {
            if id >= seen.len() || std::mem::replace(&mut seen[id], true) {
                return Err(Error::Parameter(format!("invalid or duplicate feature id {id}")));
            }
        }
        let mut prev = problem.objective(&[])?;
        let mut gains = Vec::with_capacity(chosen.len());
        for i in 0..chosen.len() {
            let v = problem.objective(&chosen[..=i])?;
            gains.push(v - prev);
            prev = v;
        }
        Ok(Selection {
            n_objective_evals: chosen.len() + 1,
            chosen,
            objective_value: prev,
            marginal_gains: gains,
            method,
            short_budget: false,
        })
    }

    pub fn sorted_ids(&self) -> Vec<usize> {
        let mut ids = self.chosen.clone();
        ids.sort_unstable();
        ids
    }
}

/// Upper bound on `f(S + {l})` for every remaining candidate.
fn upper_bounds(
    problem: &Problem,
    current: &DMatrix<f64>,
    eig: Option<&EigPair>,
    remaining: &[usize],
) -> Result<Vec<f64>> {
    match problem.kind {
        MetricKind::MinEig => {
            let eig = eig.expect("min-eig bounds need the current eigenpair");
            Ok(remaining
                .iter()
                .map(|&l| {
                    let d = &problem.deltas[l];
                    mineig_perturbation_bound(eig, &d.delta, d.track_prob)
                })
                .collect())
        }
        MetricKind::LogDet => remaining
            .iter()
            .map(|&l| {
                let d = &problem.deltas[l];
                diagonal_log_sum((0..current.nrows()).map(|i| current[(i, i)] + d.track_prob * d.delta[(i, i)]))
            })
            .collect(),
    }
}

/// Greedy selection with optional lazy evaluation.
///
/// Every iteration recomputes the upper bounds of all remaining candidates,
/// visits them in decreasing bound order and, when `lazy` is set, stops as
/// soon as a bound falls below the best value found. Ties on the objective
/// go to the lowest feature id, so lazy and naive runs pick the same features.
pub fn greedy_select(problem: &Problem, kappa: usize, lazy: bool) -> Result<Selection> {
    problem.check_dims()?;
    let n = problem.n_features();
    let budget = kappa.min(n);
    let mut current = problem.omega_bar.matrix().clone();
    let mut f_current = evaluate(problem.kind, &current)?;
    let mut evals = 1;
    let mut chosen = Vec::with_capacity(budget);
    let mut gains = Vec::with_capacity(budget);
    let mut remaining: Vec<usize> = (0..n).collect();

    for _ in 0..budget {
        let eig = match problem.kind {
            MetricKind::MinEig => Some(EigPair::of(&current)),
            MetricKind::LogDet => None,
        };
        let bounds = upper_bounds(problem, &current, eig.as_ref(), &remaining)?;
        let mut order: Vec<usize> = (0..remaining.len()).collect();
        order.sort_by(|&a, &b| bounds[b].total_cmp(&bounds[a]).then(remaining[a].cmp(&remaining[b])));

        let mut best: Option<(usize, f64)> = None;
        for &pos in &order {
            let id = remaining[pos];
            if lazy {
                if let Some((_, f_max)) = best {
                    if bounds[pos] < f_max - LAZY_GUARD * f_max.abs().max(1.0) {
                        break;
                    }
                }
            }
            let d = &problem.deltas[id];
            let candidate = &current + &d.delta * d.track_prob;
            let value = evaluate(problem.kind, &candidate)?;
            evals += 1;
            let better = match best {
                None => true,
                Some((best_id, f_max)) => value > f_max || (value == f_max && id < best_id),
            };
            if better {
                best = Some((id, value));
            }
        }
        let (id, value) = best.expect("at least one remaining candidate");
        let d = &problem.deltas[id];
        current += &d.delta * d.track_prob;
        gains.push(value - f_current);
        f_current = value;
        chosen.push(id);
        remaining.retain(|&r| r != id);
    }

    Ok(Selection {
        chosen,
        objective_value: f_current,
        marginal_gains: gains,
        n_objective_evals: evals,
        method: SelectionMethod::Greedy {
            kind: problem.kind,
            lazy,
        },
        short_budget: kappa > n,
    })
}

/// Uniform subset of size `kappa` without replacement, in draw order.
pub fn random_subset(n_features: usize, kappa: usize, seed: u64) -> Result<Vec<usize>> {
    if kappa > n_features {
        return Err(Error::Parameter(format!(
            "cannot draw {kappa} features out of {n_features}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    Ok(index::sample(&mut rng, n_features, kappa).into_vec())
}

pub fn random_select(problem: &Problem, kappa: usize, seed: u64) -> Result<Selection> {
    let ids = random_subset(problem.n_features(), kappa, seed)?;
    Selection::evaluate(problem, ids, SelectionMethod::Random)
}

/// Indices of the `kappa` highest-scoring landmarks, ties to the lower index.
pub fn quality_order(landmarks: &[Landmark], kappa: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..landmarks.len()).collect();
    ids.sort_by(|&a, &b| landmarks[b].score.total_cmp(&landmarks[a].score).then(a.cmp(&b)));
    ids.truncate(kappa);
    ids
}

/// Top-`kappa` by appearance score; `landmarks[i]` describes candidate `i`.
pub fn quality_select(problem: &Problem, landmarks: &[Landmark], kappa: usize) -> Result<Selection> {
    if landmarks.len() != problem.n_features() {
        return Err(Error::Dimension(format!(
            "{} landmarks for {} candidates",
            landmarks.len(),
            problem.n_features()
        )));
    }
    let mut sel = Selection::evaluate(problem, quality_order(landmarks, kappa), SelectionMethod::Quality)?;
    sel.short_budget = kappa > landmarks.len();
    Ok(sel)
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Calls `visit` on every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if k > n {
        return Ok(());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx)?;
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return Ok(());
            }
        }
        if idx[i] == i + n - k {
            return Ok(());
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exact optimizer by enumerating all subsets of size `min(kappa, N)`; ties
/// go to the lexicographically smallest id set.
pub fn brute_force_select(problem: &Problem, kappa: usize) -> Result<Selection> {
    problem.check_dims()?;
    let n = problem.n_features();
    let k = kappa.min(n);
    let count = binomial(n, k);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut evals = 0;
    for_each_combination(n, k, |subset| {
        let v = problem.objective(subset)?;
        evals += 1;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((subset.to_vec(), v));
        }
        Ok(())
    })?;
    let (ids, _) = best.unwrap_or((Vec::new(), f64::NAN));
    let mut sel = Selection::evaluate(problem, ids, SelectionMethod::BruteForce(problem.kind))?;
    sel.n_objective_evals += evals;
    sel.short_budget = kappa > n;
    Ok(sel)
}
