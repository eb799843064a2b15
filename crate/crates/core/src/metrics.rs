//! Task-driven objectives over expected information matrices and the cheap
//! bounds behind lazy greedy evaluation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imu::InfoMatrix;
use crate::linalg::{cholesky_with_jitter, logdet_from_cholesky, min_eigenvalue, sorted_eigen, sym_spectral_norm};
use crate::sim::rng_from_seed;
use crate::vision::{FeatureDelta, FeatureMatrices};

/// Jitter for the single Cholesky retry in [`logdet`].
pub const LOGDET_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    MinEig,
    LogDet,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::MinEig => "mineig",
            MetricKind::LogDet => "logdet",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Smallest eigenvalue and a unit eigenvector for it.
#[derive(Debug, Clone)]
pub struct EigPair {
    pub lambda_min: f64,
    pub v_min: DVector<f64>,
}

impl EigPair {
    /// With a repeated smallest eigenvalue the solver's first basis vector is
    /// returned; the perturbation bound holds for any choice.
    pub fn of(m: &DMatrix<f64>) -> Self {
        let (vals, vecs) = sorted_eigen(m);
        Self {
            lambda_min: vals[0],
            v_min: vecs.column(0).into_owned(),
        }
    }
}

pub fn logdet(m: &DMatrix<f64>) -> Result<f64> {
    let chol = cholesky_with_jitter(m, LOGDET_JITTER)?;
    Ok(logdet_from_cholesky(&chol))
}

/// Evaluates the metric on an assembled information matrix.
pub fn evaluate(kind: MetricKind, m: &DMatrix<f64>) -> Result<f64> {
    match kind {
        MetricKind::MinEig => {
            let v = min_eigenvalue(m);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Numerical("non-finite eigenvalue".into()))
            }
        }
        MetricKind::LogDet => logdet(m),
    }
}

/// `Omega_bar + sum_{l in subset} p_l Delta_l`.
pub fn assemble(omega_bar: &InfoMatrix, deltas: &[FeatureDelta], subset: &[usize]) -> Result<DMatrix<f64>> {
    let mut m = omega_bar.matrix().clone();
    for &l in subset {
        let d = deltas
            .get(l)
            .ok_or_else(|| Error::Parameter(format!("feature {l} not among {} candidates", deltas.len())))?;
        if d.delta.nrows() != m.nrows() {
            return Err(Error::Dimension(format!(
                "delta of dimension {} vs information of dimension {}",
                d.delta.nrows(),
                m.nrows()
            )));
        }
        m += &d.delta * d.track_prob;
    }
    Ok(m)
}

pub fn objective(kind: MetricKind, omega_bar: &InfoMatrix, deltas: &[FeatureDelta], subset: &[usize]) -> Result<f64> {
    evaluate(kind, &assemble(omega_bar, deltas, subset)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `E_b[f(Omega_bar + sum_{l in S} b_l Delta_l)]` with
/// independent `b_l ~ Bernoulli(p_l)`.
pub fn expected_objective_mc(
    kind: MetricKind,
    omega_bar: &InfoMatrix,
    deltas: &[FeatureDelta],
    subset: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::Parameter("n_samples must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    // Welford updates keep the mean exact when every sample is identical.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_samples {
        let mut m = omega_bar.matrix().clone();
        for &l in subset {
            let d = deltas
                .get(l)
                .ok_or_else(|| Error::Parameter(format!("feature {l} out of range")))?;
            if rng.random::<f64>() < d.track_prob {
                m += &d.delta;
            }
        }
        let v = evaluate(kind, &m)?;
        let diff = v - mean;
        mean += diff / (i + 1) as f64;
        m2 += diff * (v - mean);
    }
    let n = n_samples as f64;
    let var = if n_samples > 1 { m2 / (n - 1.0) } else { 0.0 };
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
    })
}

/// `sum_i log M_ii`, an upper bound on `log det M` for PD `M`.
pub fn hadamard_logdet_bound(m: &DMatrix<f64>) -> Result<f64> {
    diagonal_log_sum(m.diagonal().iter().copied())
}

pub(crate) fn diagonal_log_sum(diag: impl Iterator<Item = f64>) -> Result<f64> {
    let mut acc = 0.0;
    for d in diag {
        if !(d > 0.0) {
            return Err(Error::Parameter(format!("nonpositive diagonal entry {d}")));
        }
        acc += d.ln();
    }
    Ok(acc)
}

/// `lambda_min(M) + ||p Delta v_min||`, an upper bound on `lambda_min(M + p Delta)`.
pub fn mineig_perturbation_bound(eig: &EigPair, delta: &DMatrix<f64>, p: f64) -> f64 {
    eig.lambda_min + p.abs() * (delta * &eig.v_min).norm()
}

/// Weyl: every eigenvalue moves by at most the spectral norm of the perturbation.
pub fn weyl_shift_bound(delta: &DMatrix<f64>) -> f64 {
    sym_spectral_norm(delta)
}

/// Ipsen-Nadler residual bound `||Delta v_i||` for eigenvector `v_i` of `M`.
pub fn ipsen_residual_bound(delta: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (delta * v).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Sandwich on the min-eigenvalue gain `lambda_min(Omega + Delta) - lambda_min(Omega)`.
///
/// The upper bound is `w * sum_c ||[u_c]x (R^W_cam,c)^T mu_c||^2` where `mu_c`
/// are the position entries of the base min-eigenvector; the lower bound is
/// `mu'^T Delta mu'` with `mu'` the min-eigenvector after the update.
pub fn geometric_gain_bounds(
    eig_base: &EigPair,
    eig_updated: &EigPair,
    fm: &FeatureMatrices,
    delta: &FeatureDelta,
) -> GainBounds {
    let mu = &eig_base.v_min;
    let mut upper = 0.0;
    for (i, &c) in fm.visible_frames.iter().enumerate() {
        let mu_c = mu.fixed_rows::<3>(9 * c).into_owned();
        upper += (fm.e_block(i) * mu_c).norm_squared();
    }
    upper *= fm.weight;
    let mu2 = &eig_updated.v_min;
    let lower = mu2.dot(&(&delta.delta * mu2));
    GainBounds { lower, upper }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_of(m: DMatrix<f64>, p: f64) -> FeatureDelta {
        FeatureDelta {
            landmark_id: 0,
            n_frames: 2,
            delta: m,
            track_prob: p,
        }
    }

    #[test]
    fn empty_subset_is_base_value() {
        let base = InfoMatrix::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 5.0]))).unwrap();
        let deltas = vec![delta_of(DMatrix::identity(3, 3), 1.0)];
        assert_eq!(objective(MetricKind::MinEig, &base, &deltas, &[]).unwrap(), 2.0);
        let ld = objective(MetricKind::LogDet, &base, &deltas, &[]).unwrap();
        assert!((ld - 30f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn diagonal_closed_form() {
        let base = InfoMatrix::from_matrix(DMatrix::identity(4, 4)).unwrap();
        let d = [0.5, 2.0, 0.1, 3.0];
        let deltas = vec![delta_of(DMatrix::from_diagonal(&DVector::from_row_slice(&d)), 1.0)];
        let ld = objective(MetricKind::LogDet, &base, &deltas, &[0]).unwrap();
        let expected: f64 = d.iter().map(|x| (1.0 + x).ln()).sum();
        assert!((ld - expected).abs() < 1e-14);
        let me = objective(MetricKind::MinEig, &base, &deltas, &[0]).unwrap();
        assert!((me - 1.1).abs() < 1e-14);
    }

    #[test]
    fn zero_probability_discounts_everything() {
        let base = InfoMatrix::from_matrix(DMatrix::identity(3, 3) * 2.0).unwrap();
        let deltas = vec![delta_of(DMatrix::identity(3, 3), 0.0), delta_of(DMatrix::identity(3, 3) * 4.0, 0.0)];
        for kind in [MetricKind::MinEig, MetricKind::LogDet] {
            let e = objective(kind, &base, &deltas, &[]).unwrap();
            assert_eq!(objective(kind, &base, &deltas, &[0, 1]).unwrap(), e);
            let mc = expected_objective_mc(kind, &base, &deltas, &[0, 1], 10, 1).unwrap();
            assert_eq!(mc.mean, e);
        }
    }

    #[test]
    fn certain_tracks_make_mc_exact() {
        let base = InfoMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        let deltas = vec![delta_of(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 2.0])), 1.0)];
        for n in [1, 7] {
            let mc = expected_objective_mc(MetricKind::LogDet, &base, &deltas, &[0], n, 3).unwrap();
            assert_eq!(mc.mean, objective(MetricKind::LogDet, &base, &deltas, &[0]).unwrap());
        }
        assert!(expected_objective_mc(MetricKind::LogDet, &base, &deltas, &[0], 0, 3).is_err());
    }

    #[test]
    fn hadamard_cases() {
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        assert!((hadamard_logdet_bound(&diag).unwrap() - logdet(&diag).unwrap()).abs() < 1e-15);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let bound = hadamard_logdet_bound(&m).unwrap();
        assert!((bound - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((logdet(&m).unwrap() - 3f64.ln()).abs() < 1e-14);
        assert!(bound >= logdet(&m).unwrap());
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(hadamard_logdet_bound(&bad).is_err());
    }

    #[test]
    fn mineig_bound_rank_one_shift() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 0.5, 0.0, 0.5, 2.0, 0.1, 0.0, 0.1, 1.0]);
        let eig = EigPair::of(&m);
        assert_eq!(mineig_perturbation_bound(&eig, &DMatrix::zeros(3, 3), 1.0), eig.lambda_min);
        let alpha = 0.7;
        let d = &eig.v_min * eig.v_min.transpose() * alpha;
        let bound = mineig_perturbation_bound(&eig, &d, 1.0);
        assert!((bound - (eig.lambda_min + alpha)).abs() < 1e-12);
        assert!(min_eigenvalue(&(&m + &d)) <= bound + 1e-12);
    }
}
