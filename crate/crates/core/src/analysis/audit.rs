use crate::analysis::ratio::RatioReport;
use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::selection::{Problem, Selection};

/// Relative slack granted to the bound check for round-off.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub kind: MetricKind,
    /// Guaranteed lower bound on the greedy value.
    pub bound: f64,
    pub achieved: f64,
    pub optimum: f64,
    /// `achieved - bound`.
    pub slack: f64,
    pub passed: bool,
}

/// Checks the greedy value against the applicable approximation guarantee:
/// `(1 - 1/e) f(S*) + f(empty)/e` for the log-determinant and
/// `(1 - exp(-gamma)) f(S*)` for the smallest eigenvalue.
pub fn guarantee_audit(
    problem: &Problem,
    selection: &Selection,
    brute: &Selection,
    ratio: Option<&RatioReport>,
) -> Result<AuditReport> {
    let optimum = brute.objective_value;
    let achieved = selection.objective_value;
    let bound = match problem.kind {
        MetricKind::LogDet => {
            let e = std::f64::consts::E;
            (1.0 - 1.0 / e) * optimum + problem.objective(&[])? / e
        }
        MetricKind::MinEig => {
            let gamma = ratio
                .ok_or_else(|| Error::Parameter("the min-eigenvalue audit needs a submodularity ratio".into()))?
                .gamma;
            (1.0 - (-gamma.max(0.0)).exp()) * optimum
        }
    };
    let slack = achieved - bound;
    Ok(AuditReport {
        kind: problem.kind,
        bound,
        achieved,
        optimum,
        slack,
        passed: slack >= -AUDIT_TOLERANCE * bound.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imu::InfoMatrix;
    use crate::selection::{brute_force_select, greedy_select};
    use crate::vision::FeatureDelta;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn optimal_greedy_leaves_one_over_e_slack() {
        let base = InfoMatrix::from_matrix(DMatrix::identity(2, 2)).unwrap();
        let deltas: Vec<FeatureDelta> = [[3.0, 0.0], [0.0, 1.0]]
            .iter()
            .enumerate()
            .map(|(i, d)| FeatureDelta {
                landmark_id: i,
                delta: DMatrix::from_diagonal(&DVector::from_row_slice(d)),
                track_prob: 1.0,
                n_frames: 2,
            })
            .collect();
        let p = Problem::new(&base, &deltas, MetricKind::LogDet);
        let g = greedy_select(&p, 1, true).unwrap();
        let b = brute_force_select(&p, 1).unwrap();
        let a = guarantee_audit(&p, &g, &b, None).unwrap();
        let f0 = p.objective(&[]).unwrap();
        assert!(a.passed);
        assert!((a.slack - (b.objective_value - f0) / std::f64::consts::E).abs() < 1e-12);
        let pm = p.with_kind(MetricKind::MinEig);
        assert!(guarantee_audit(&pm, &g, &b, None).is_err());
    }
}
