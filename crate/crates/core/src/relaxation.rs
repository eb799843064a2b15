//! Box-and-budget convex relaxation solved by conditional gradient, top-kappa
//! rounding and the resulting a-posteriori suboptimality certificate.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, logdet_from_cholesky, sorted_eigen, sorted_eigenvalues, symmetrize};
use crate::metrics::{evaluate, MetricKind, LOGDET_JITTER};
use crate::selection::{Problem, Selection, SelectionMethod};

/// Relative eigenvalue spread under which the two smallest eigenvalues are
/// treated as one eigenspace when choosing the ascent direction.
const MULTIPLICITY_TOL: f64 = 1e-8;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationOptions {
    pub max_iters: usize,
    /// Stop once the Frank-Wolfe gap is below `tol * max(1, |f|)`.
    pub tol: f64,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub fw_gap: f64,
}

#[derive(Debug, Clone)]
pub struct RelaxationResult {
    pub s: DVector<f64>,
    /// Upper bound on the relaxed optimum, hence on the integer optimum.
    pub f_cvx: f64,
    /// Best relaxed objective value reached.
    pub f_relaxed: f64,
    pub rounded: Selection,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

/// `Omega_bar + sum_l s_l p_l Delta_l`.
pub fn relaxed_information(problem: &Problem, s: &DVector<f64>) -> DMatrix<f64> {
    let mut m = problem.omega_bar.matrix().clone();
    for (l, d) in problem.deltas.iter().enumerate() {
        if s[l] != 0.0 {
            m += &d.delta * (s[l] * d.track_prob);
        }
    }
    m
}

fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Value and supergradient at `s`. For the min-eigenvalue the returned
/// gradient uses one exact eigenvector, which is always a supergradient; the
/// second vector is the ascent direction (averaged over a near-repeated
/// smallest eigenvalue).
fn value_and_gradients(problem: &Problem, s: &DVector<f64>) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    let m = relaxed_information(problem, s);
    let n = problem.n_features();
    match problem.kind {
        MetricKind::LogDet => {
            let chol = cholesky_with_jitter(&m, LOGDET_JITTER)?;
            let value = logdet_from_cholesky(&chol);
            let inv = chol.inverse();
            let g = DVector::from_iterator(
                n,
                problem.deltas.iter().map(|d| d.track_prob * frobenius(&inv, &d.delta)),
            );
            Ok((value, g.clone(), g))
        }
        MetricKind::MinEig => {
            let (vals, vecs) = sorted_eigen(&m);
            if !vals[0].is_finite() {
                return Err(Error::Numerical("non-finite eigenvalue".into()));
            }
            let v0 = vecs.column(0).into_owned();
            let quad = |v: &DVector<f64>| -> DVector<f64> {
                DVector::from_iterator(n, problem.deltas.iter().map(|d| d.track_prob * v.dot(&(&d.delta * v))))
            };
            let g = quad(&v0);
            let scale = vals[0].abs().max(vals[vals.len() - 1].abs()).max(f64::MIN_POSITIVE);
            let mult = (1..vals.len())
                .take_while(|&i| vals[i] - vals[0] <= MULTIPLICITY_TOL * scale)
                .count()
                + 1;
            let dir = if mult > 1 {
                let mut acc = g.clone();
                for i in 1..mult {
                    acc += quad(&vecs.column(i).into_owned());
                }
                acc / mult as f64
            } else {
                g.clone()
            };
            Ok((vals[0], g, dir))
        }
    }
}

/// Vertex of `{s in [0,1]^N, sum s <= kappa}` maximizing `g^T s`.
fn linear_oracle(g: &DVector<f64>, kappa: usize) -> DVector<f64> {
    let mut v = DVector::zeros(g.len());
    for id in top_k_positive(g, kappa) {
        v[id] = 1.0;
    }
    v
}

fn top_k_positive(g: &DVector<f64>, kappa: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 0.0).collect();
    ids.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    ids.truncate(kappa);
    ids
}

/// Exact line search of `log det(M + t D)` over `[0, 1]`.
fn logdet_line_search(m: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<f64> {
    let chol = cholesky_with_jitter(m, LOGDET_JITTER)?;
    let l = chol.l();
    let linv_d = l.solve_lower_triangular(d).ok_or_else(|| Error::Numerical("singular factor".into()))?;
    let mut w = l
        .solve_lower_triangular(&linv_d.transpose())
        .ok_or_else(|| Error::Numerical("singular factor".into()))?;
    symmetrize(&mut w);
    let mu = sorted_eigenvalues(&w);
    let phi = |t: f64| -> f64 {
        mu.iter()
            .map(|&x| {
                let a = 1.0 + t * x;
                if a > 0.0 {
                    a.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .sum()
    };
    let slope0: f64 = mu.iter().sum();
    if slope0 <= 0.0 {
        return Ok(0.0);
    }
    let slope1: f64 = mu.iter().map(|&x| x / (1.0 + x)).sum();
    if slope1 >= 0.0 {
        return Ok(1.0);
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - r * (b - a);
    let mut e = a + r * (b - a);
    let (mut fc, mut fe) = (phi(c), phi(e));
    for _ in 0..GOLDEN_ITERS {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - r * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + r * (b - a);
            fe = phi(e);
        }
    }
    Ok(0.5 * (a + b))
}

/// Maximizes the concave relaxation over `{s in [0,1]^N, sum s <= kappa}`
/// with Frank-Wolfe and rounds the result to the `kappa` largest entries.
///
/// `f_cvx` is the smallest `f(s_t) + gap_t` over all iterates. Each of
/// these is an upper bound on the relaxed optimum by concavity, so the
/// minimum is too.
pub fn solve_relaxation(problem: &Problem, kappa: usize, opts: &RelaxationOptions) -> Result<RelaxationResult> {
    let n = problem.n_features();
    if n == 0 {
        return Err(Error::Parameter("relaxation needs at least one candidate".into()));
    }
    if !problem.omega_bar.is_positive_definite() {
        return Err(Error::Numerical("prior information is not positive definite".into()));
    }
    let mut s = DVector::zeros(n);
    let mut best_s = s.clone();
    let mut best_value = f64::NEG_INFINITY;
    let mut f_cvx = f64::INFINITY;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for t in 0..opts.max_iters.max(1) {
        let (value, g_cert, g_dir) = value_and_gradients(problem, &s)?;
        let vertex_cert = linear_oracle(&g_cert, kappa);
        let gap = g_cert.dot(&(&vertex_cert - &s)).max(0.0);
        f_cvx = f_cvx.min(value + gap);
        if value > best_value {
            best_value = value;
            best_s = s.clone();
        }
        trace.push(TraceRow {
            iteration: t,
            objective: value,
            fw_gap: gap,
        });
        iterations = t + 1;
        if gap <= opts.tol * value.abs().max(1.0) {
            converged = true;
            break;
        }
        let vertex = match problem.kind {
            MetricKind::LogDet => vertex_cert,
            MetricKind::MinEig => linear_oracle(&g_dir, kappa),
        };
        let dir = &vertex - &s;
        let step = match problem.kind {
            MetricKind::LogDet => {
                let mut d = DMatrix::zeros(problem.omega_bar.dim(), problem.omega_bar.dim());
                for (l, fd) in problem.deltas.iter().enumerate() {
                    if dir[l] != 0.0 {
                        d += &fd.delta * (dir[l] * fd.track_prob);
                    }
                }
                logdet_line_search(&relaxed_information(problem, &s), &d)?
            }
            MetricKind::MinEig => 2.0 / (t as f64 + 2.0),
        };
        s += dir * step;
        // Keep iterates inside the box despite rounding.
        s.apply(|x| *x = x.clamp(0.0, 1.0));
    }
    if !converged {
        let value = evaluate(problem.kind, &relaxed_information(problem, &s))?;
        if value > best_value {
            best_value = value;
            best_s = s.clone();
        }
    }

    let mut rounded = round_topk(problem, &best_s, kappa)?;
    rounded.n_objective_evals += iterations;
    let gap = f_cvx - rounded.objective_value;
    Ok(RelaxationResult {
        s: best_s,
        f_cvx,
        f_relaxed: best_value,
        rounded,
        gap,
        iterations,
        converged,
        trace,
    })
}

/// Indices of the `kappa` largest entries, ties to the lower index.
pub fn topk_indices(s: &DVector<f64>, kappa: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..s.len()).collect();
    ids.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    ids.truncate(kappa);
    ids
}

pub fn round_topk(problem: &Problem, s: &DVector<f64>, kappa: usize) -> Result<Selection> {
    if s.len() != problem.n_features() {
        return Err(Error::Dimension(format!(
            "relaxed vector of length {} for {} candidates",
            s.len(),
            problem.n_features()
        )));
    }
    let mut sel = Selection::evaluate(problem, topk_indices(s, kappa), SelectionMethod::RelaxedRounded(problem.kind))?;
    sel.short_budget = kappa > s.len();
    Ok(sel)
}

/// `f_cvx - f(rounded)`, an upper bound on the suboptimality of the rounded set.
pub fn posterior_certificate(result: &RelaxationResult) -> f64 {
    result.f_cvx - result.rounded.objective_value
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["iteration", "objective", "fw_gap"])?;
    for row in trace {
        w.write_record([
            row.iteration.to_string(),
            format!("{:.16e}", row.objective),
            format!("{:.16e}", row.fw_gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}
