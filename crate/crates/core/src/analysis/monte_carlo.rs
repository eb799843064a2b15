//! Monte Carlo harness: simulate, select, estimate and aggregate.
//!
//! The trajectory is cut into non-overlapping horizon windows. In every
//! window each selector picks features among the triangulable candidates,
//! and the selection is scored and fed to the linear estimator with a fresh
//! noise realization per run. When the landmark field is fixed across runs
//! the seed-independent selections are computed once per window.

use std::path::Path;

use rayon::prelude::*;

use crate::csvio::fmt;
use crate::analysis::estimator::{estimate_state, synthesize_measurements};
use crate::config::{ExperimentConfig, LandmarkField, SelectorKind, TrajectorySpec};
use crate::error::{Error, Result};
use crate::imu::{accumulate_prior_info, build_imu_blocks, prior_info_from_variances, ImuBlock, InfoMatrix, Matrix9};
use crate::metrics::MetricKind;
use crate::relaxation::{solve_relaxation, RelaxationResult, TraceRow};
use crate::selection::{brute_force_select, greedy_select, quality_select, random_select, Problem, Selection};
use crate::sim::{
    derive_seed, make_circular_trajectory, make_straight_trajectory, sample_landmarks, sample_landmarks_ring,
    score_to_track_prob, simulate_measurement_noise, CameraModel, ImuParams, Landmark, Trajectory,
};
use crate::state::HorizonState;
use crate::vision::{candidate_features, FeatureDelta, FeatureMatrices};

const STREAM_FIELD: u64 = 1;
const STREAM_RANDOM: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_RUN_FIELD: u64 = 4;
const MAX_FIELD_ATTEMPTS: u64 = 64;

/// Folds a path of stream ids into one seed.
pub fn seed_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |s, &p| derive_seed(s, p))
}

/// One selector in one window of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub run_id: usize,
    pub selector: SelectorKind,
    pub n_landmarks: usize,
    pub kappa: usize,
    pub window: usize,
    pub n_candidates: usize,
    pub chosen: Vec<usize>,
    pub objective: f64,
    /// Relaxed upper bound for the selector's metric, NaN when not computed.
    pub f_cvx: f64,
    pub certificate_gap: f64,
    pub n_evals: usize,
    pub mean_rel_trans_err: f64,
    pub mean_abs_trans_err: f64,
    pub nees: f64,
    pub diverged: bool,
}

/// One selector over all windows of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub selector: SelectorKind,
    pub n_landmarks: usize,
    pub kappa: usize,
    pub objective: f64,
    pub certificate_gap: f64,
    pub n_evals: usize,
    pub mean_rel_trans_err: f64,
    pub mean_abs_trans_err: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub selector: SelectorKind,
    pub n_landmarks: usize,
    pub kappa: usize,
    pub n_runs: usize,
    pub n_diverged: usize,
    pub objective_mean: f64,
    pub n_evals_mean: f64,
    pub rel_err_mean: f64,
    pub rel_err_median: f64,
    pub rel_err_std: f64,
    pub abs_err_mean: f64,
    pub abs_err_median: f64,
    pub abs_err_std: f64,
    /// Percentage change of the mean relative error against `random`.
    pub rel_err_vs_random_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub metric: MetricKind,
    pub n_features: usize,
    pub greedy: f64,
    pub rounded: f64,
    pub relaxed: f64,
    pub random: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n_landmarks: usize,
    pub kappa: usize,
    pub window: usize,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McOutput {
    pub n_windows: usize,
    pub windows: Vec<WindowRecord>,
    pub runs: Vec<RunRecord>,
    pub aggregate: Vec<AggregateRow>,
    pub plot: Vec<PlotRow>,
    pub traces: Vec<TraceRecord>,
}

/// Immutable pieces shared by every run.
struct Setup<'a> {
    cfg: &'a ExperimentConfig,
    imu: ImuParams,
    camera: CameraModel,
    prior: Matrix9,
    weight: f64,
    windows: Vec<WindowModel>,
}

struct WindowModel {
    traj: Trajectory,
    blocks: Vec<ImuBlock>,
    omega_bar: InfoMatrix,
}

struct Candidates {
    features: Vec<FeatureMatrices>,
    deltas: Vec<FeatureDelta>,
    landmarks: Vec<Landmark>,
}

#[derive(Debug, Clone)]
struct Outcome {
    selector: SelectorKind,
    chosen: Vec<usize>,
    objective: f64,
    f_cvx: f64,
    certificate_gap: f64,
    n_evals: usize,
    failed: bool,
}

/// Relaxations and seed-independent selections of one window.
struct WindowPlan {
    outcomes: Vec<Outcome>,
    relaxation: Option<RelaxationResult>,
}

pub fn full_trajectory(cfg: &ExperimentConfig) -> Result<Trajectory> {
    let kdt = cfg.camera.keyframe_dt;
    let dt = cfg.imu.delta;
    match cfg.trajectory {
        TrajectorySpec::Straight { speed, duration } => make_straight_trajectory(speed, duration, kdt, dt),
        TrajectorySpec::Circle {
            radius,
            angular_rate,
            vertical_amplitude,
            vertical_freq,
            duration,
        } => make_circular_trajectory(radius, angular_rate, vertical_amplitude, vertical_freq, duration, kdt, dt),
    }
}

/// Keyframe intervals per horizon window.
pub fn horizon_intervals(cfg: &ExperimentConfig) -> usize {
    ((cfg.horizon_s / cfg.camera.keyframe_dt) + 1e-9).floor().max(1.0) as usize
}

/// Start keyframes of the non-overlapping windows.
pub fn window_starts(n_keyframes: usize, horizon: usize) -> Vec<usize> {
    (0..)
        .map(|i| i * horizon)
        .take_while(|&s| s + horizon < n_keyframes)
        .collect()
}

/// Isotropic information weight of a bearing constraint.
pub fn vision_weight(focal: f64, pixel_sigma: f64) -> f64 {
    (focal / pixel_sigma).powi(2)
}

fn build_setup(cfg: &ExperimentConfig) -> Result<Setup<'_>> {
    cfg.validate()?;
    let imu = cfg.imu.params();
    let camera = cfg.camera.model();
    let prior = prior_info_from_variances(cfg.prior.position_var, cfg.prior.velocity_var, cfg.prior.bias_var)?;
    let traj = full_trajectory(cfg)?;
    let horizon = horizon_intervals(cfg);
    let windows = window_starts(traj.num_keyframes(), horizon)
        .into_iter()
        .map(|s| {
            let w = traj.window(s, horizon + 1)?;
            let blocks = build_imu_blocks(&w, &imu)?;
            let omega_bar = accumulate_prior_info(&blocks, &prior, w.horizon())?;
            if !omega_bar.is_positive_definite() {
                return Err(Error::Numerical(format!("prior information of window at keyframe {s} is not positive definite")));
            }
            Ok(WindowModel { traj: w, blocks, omega_bar })
        })
        .collect::<Result<Vec<_>>>()?;
    if windows.is_empty() {
        return Err(Error::config("horizon_s", "trajectory is shorter than one horizon"));
    }
    Ok(Setup {
        cfg,
        imu,
        camera,
        prior,
        weight: vision_weight(cfg.camera.focal, cfg.pixel_sigma),
        windows,
    })
}

fn with_track_probs(setup: &Setup, mut landmarks: Vec<Landmark>) -> Result<Vec<Landmark>> {
    let (smin, smax) = setup.cfg.landmarks.score_range();
    for lm in &mut landmarks {
        lm.track_prob = match setup.cfg.track_prob_floor {
            Some(floor) => score_to_track_prob(lm.score, smin, smax, floor)?,
            None => 1.0,
        };
    }
    Ok(landmarks)
}

/// Landmark field fixed by the master seed (ring fields).
fn fixed_field(setup: &Setup, n: usize) -> Result<Vec<Landmark>> {
    let cfg = setup.cfg;
    let seed = seed_path(cfg.master_seed, &[STREAM_FIELD, n as u64]);
    match &cfg.landmarks {
        LandmarkField::Ring {
            center,
            inner_radius,
            outer_radius,
            z_range,
            score_range,
        } => with_track_probs(
            setup,
            sample_landmarks_ring(
                n,
                (*center).into(),
                (*inner_radius, *outer_radius),
                (z_range[0], z_range[1]),
                (score_range[0], score_range[1]),
                seed,
            )?,
        ),
        LandmarkField::Box { .. } => Err(Error::Parameter("box fields are sampled per run".into())),
    }
}

/// Box field resampled for one run until `n` landmarks are triangulable in
/// the first window; ids are renumbered `0..n`.
fn run_field(setup: &Setup, pair: usize, n: usize, run: usize) -> Result<Vec<Landmark>> {
    let cfg = setup.cfg;
    let bounds = cfg
        .landmarks
        .aabb()
        .ok_or_else(|| Error::Parameter("ring fields are fixed across runs".into()))?;
    let first = &setup.windows[0].traj;
    let mut kept: Vec<Landmark> = Vec::with_capacity(n);
    for attempt in 0..MAX_FIELD_ATTEMPTS {
        let seed = seed_path(cfg.master_seed, &[STREAM_RUN_FIELD, pair as u64, run as u64, attempt]);
        let pool = sample_landmarks((4 * n).max(32), bounds, cfg.landmarks.score_range(), seed)?;
        for (fm, _) in candidate_features(first, &setup.camera, &pool, 1.0)? {
            if kept.len() == n {
                break;
            }
            let mut lm = pool[fm.landmark_id].clone();
            lm.id = kept.len();
            kept.push(lm);
        }
        if kept.len() == n {
            return with_track_probs(setup, kept);
        }
    }
    Err(Error::Parameter(format!(
        "could not find {n} triangulable landmarks in the configured box"
    )))
}

fn candidates(setup: &Setup, window: &WindowModel, landmarks: &[Landmark]) -> Result<Candidates> {
    let pairs = candidate_features(&window.traj, &setup.camera, landmarks, setup.cfg.selection_weight)?;
    let mut features = Vec::with_capacity(pairs.len());
    let mut deltas = Vec::with_capacity(pairs.len());
    let mut lms = Vec::with_capacity(pairs.len());
    for (mut fm, d) in pairs {
        // Selection scores use the configured weight, the estimator the
        // actual pixel noise.
        fm.weight = setup.weight;
        lms.push(landmarks[fm.landmark_id].clone());
        features.push(fm);
        deltas.push(d);
    }
    Ok(Candidates {
        features,
        deltas,
        landmarks: lms,
    })
}

fn scoring_metric(sel: SelectorKind, default: MetricKind) -> MetricKind {
    match sel {
        SelectorKind::GreedyMineig => MetricKind::MinEig,
        SelectorKind::GreedyLogdet => MetricKind::LogDet,
        _ => default,
    }
}

fn outcome(sel: SelectorKind, result: Result<Selection>, relaxation: Option<&RelaxationResult>, metric: MetricKind, default: MetricKind) -> Outcome {
    let f_cvx = match relaxation {
        Some(r) if metric == default => r.f_cvx,
        _ => f64::NAN,
    };
    match result {
        Ok(s) => Outcome {
            selector: sel,
            objective: s.objective_value,
            certificate_gap: f_cvx - s.objective_value,
            f_cvx,
            n_evals: s.n_objective_evals,
            chosen: s.chosen,
            failed: false,
        },
        Err(_) => Outcome {
            selector: sel,
            chosen: Vec::new(),
            objective: f64::NAN,
            f_cvx,
            certificate_gap: f64::NAN,
            n_evals: 0,
            failed: true,
        },
    }
}

fn plan_window(setup: &Setup, window: &WindowModel, cands: &Candidates, kappa: usize) -> WindowPlan {
    let cfg = setup.cfg;
    let base = Problem::new(&window.omega_bar, &cands.deltas, cfg.metric);
    let relaxation = if cfg.selectors.contains(&SelectorKind::RelaxedRounded) && !cands.deltas.is_empty() {
        solve_relaxation(&base, kappa, &cfg.relaxation.options()).ok()
    } else {
        None
    };
    let outcomes = cfg
        .selectors
        .iter()
        .filter(|s| !s.is_randomized())
        .map(|&sel| {
            let metric = scoring_metric(sel, cfg.metric);
            let problem = base.with_kind(metric);
            let result = match sel {
                SelectorKind::GreedyMineig | SelectorKind::GreedyLogdet => greedy_select(&problem, kappa, true),
                SelectorKind::Quality => quality_select(&problem, &cands.landmarks, kappa.min(cands.landmarks.len())),
                SelectorKind::Brute => brute_force_select(&problem, kappa),
                SelectorKind::RelaxedRounded => relaxation
                    .as_ref()
                    .map(|r| r.rounded.clone())
                    .ok_or_else(|| Error::Numerical("relaxation failed".into())),
                SelectorKind::Random => unreachable!(),
            };
            outcome(sel, result, relaxation.as_ref(), metric, cfg.metric)
        })
        .collect();
    WindowPlan { outcomes, relaxation }
}

#[allow(clippy::too_many_arguments)]
fn run_window(
    setup: &Setup,
    window_idx: usize,
    cands: &Candidates,
    landmarks: &[Landmark],
    plan: &WindowPlan,
    pair: usize,
    n_landmarks: usize,
    kappa: usize,
    run: usize,
) -> Result<Vec<WindowRecord>> {
    let cfg = setup.cfg;
    let window = &setup.windows[window_idx];
    let base = Problem::new(&window.omega_bar, &cands.deltas, cfg.metric);
    let mut outcomes = Vec::with_capacity(cfg.selectors.len());
    let mut fixed = plan.outcomes.iter();
    for &sel in &cfg.selectors {
        if sel.is_randomized() {
            let seed = seed_path(cfg.master_seed, &[STREAM_RANDOM, pair as u64, run as u64, window_idx as u64]);
            let k = kappa.min(cands.deltas.len());
            outcomes.push(outcome(sel, random_select(&base, k, seed), plan.relaxation.as_ref(), cfg.metric, cfg.metric));
        } else {
            outcomes.push(fixed.next().expect("one planned outcome per selector").clone());
        }
    }

    let noise_seed = seed_path(cfg.master_seed, &[STREAM_NOISE, pair as u64, run as u64, window_idx as u64]);
    let log = simulate_measurement_noise(&window.traj, landmarks, &setup.imu, &setup.camera, cfg.pixel_sigma, noise_seed)?;
    let truth = HorizonState::ground_truth(&window.traj, Some(&log));

    let mut out = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let mut rec = WindowRecord {
            run_id: run,
            selector: o.selector,
            n_landmarks,
            kappa,
            window: window_idx,
            n_candidates: cands.deltas.len(),
            chosen: o.chosen.clone(),
            objective: o.objective,
            f_cvx: o.f_cvx,
            certificate_gap: o.certificate_gap,
            n_evals: o.n_evals,
            mean_rel_trans_err: f64::NAN,
            mean_abs_trans_err: f64::NAN,
            nees: f64::NAN,
            diverged: true,
        };
        if !o.failed {
            // A selected track only contributes when it survives.
            // Candidate order, so equal sets give bitwise equal estimates.
            let mut ids = o.chosen.clone();
            ids.sort_unstable();
            let tracked: Vec<&FeatureMatrices> = ids
                .iter()
                .map(|&c| &cands.features[c])
                .filter(|fm| log.track_uniform[fm.landmark_id] < landmarks[fm.landmark_id].track_prob)
                .collect();
            let est = synthesize_measurements(&window.traj, &setup.imu, &setup.camera, &setup.prior, &tracked, &log, &truth)
                .and_then(|m| estimate_state(&window.omega_bar, &window.blocks, &setup.prior, &tracked, &m, &truth));
            if let Ok(est) = est {
                rec.mean_rel_trans_err = est.errors.mean_rel_translation();
                rec.mean_abs_trans_err = est.errors.mean_abs_translation();
                rec.nees = est.nees;
                rec.diverged = false;
            }
        }
        out.push(rec);
    }
    Ok(out)
}

fn nan_mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.filter(|x| !x.is_nan()).fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.retain(|x| !x.is_nan());
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn std_dev(v: &[f64]) -> f64 {
    let xs: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if xs.len() < 2 {
        return if xs.is_empty() { f64::NAN } else { 0.0 };
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn run_records(windows: &[WindowRecord], selectors: &[SelectorKind]) -> Vec<RunRecord> {
    // Window records arrive grouped by (pair, run) with every selector per window.
    let mut out = Vec::new();
    let mut i = 0;
    while i < windows.len() {
        let (run, n, k) = (windows[i].run_id, windows[i].n_landmarks, windows[i].kappa);
        let mut j = i;
        while j < windows.len() && (windows[j].run_id, windows[j].n_landmarks, windows[j].kappa) == (run, n, k) {
            j += 1;
        }
        let group = &windows[i..j];
        for &sel in selectors {
            let recs: Vec<&WindowRecord> = group.iter().filter(|w| w.selector == sel).collect();
            let ok: Vec<&&WindowRecord> = recs.iter().filter(|w| !w.diverged).collect();
            out.push(RunRecord {
                run_id: run,
                selector: sel,
                n_landmarks: n,
                kappa: k,
                objective: nan_mean(recs.iter().map(|w| w.objective)),
                certificate_gap: nan_mean(recs.iter().map(|w| w.certificate_gap)),
                n_evals: recs.iter().map(|w| w.n_evals).sum(),
                mean_rel_trans_err: nan_mean(ok.iter().map(|w| w.mean_rel_trans_err)),
                mean_abs_trans_err: nan_mean(ok.iter().map(|w| w.mean_abs_trans_err)),
                diverged: recs.iter().any(|w| w.diverged),
            });
        }
        i = j;
    }
    out
}

fn aggregate(runs: &[RunRecord], pairs: &[(usize, usize)], selectors: &[SelectorKind]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for &(n, k) in pairs {
        let random_mean = nan_mean(
            runs.iter()
                .filter(|r| r.selector == SelectorKind::Random && (r.n_landmarks, r.kappa) == (n, k) && !r.diverged)
                .map(|r| r.mean_rel_trans_err),
        );
        for &sel in selectors {
            let rs: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.selector == sel && (r.n_landmarks, r.kappa) == (n, k))
                .collect();
            let ok: Vec<&&RunRecord> = rs.iter().filter(|r| !r.diverged).collect();
            let rel: Vec<f64> = ok.iter().map(|r| r.mean_rel_trans_err).collect();
            let abs: Vec<f64> = ok.iter().map(|r| r.mean_abs_trans_err).collect();
            let rel_mean = nan_mean(rel.iter().copied());
            out.push(AggregateRow {
                selector: sel,
                n_landmarks: n,
                kappa: k,
                n_runs: rs.len(),
                n_diverged: rs.len() - ok.len(),
                objective_mean: nan_mean(rs.iter().map(|r| r.objective)),
                n_evals_mean: nan_mean(rs.iter().map(|r| r.n_evals as f64)),
                rel_err_mean: rel_mean,
                rel_err_median: median(rel.clone()),
                rel_err_std: std_dev(&rel),
                abs_err_mean: nan_mean(abs.iter().copied()),
                abs_err_median: median(abs.clone()),
                abs_err_std: std_dev(&abs),
                rel_err_vs_random_pct: 100.0 * (rel_mean - random_mean) / random_mean,
            });
        }
    }
    out
}

fn plot_rows(windows: &[WindowRecord], cfg: &ExperimentConfig) -> Vec<PlotRow> {
    let greedy_sel = match cfg.metric {
        MetricKind::MinEig => SelectorKind::GreedyMineig,
        MetricKind::LogDet => SelectorKind::GreedyLogdet,
    };
    cfg.budget_pairs()
        .into_iter()
        .map(|(n, k)| {
            let of = |sel: SelectorKind, f: fn(&WindowRecord) -> f64| {
                nan_mean(
                    windows
                        .iter()
                        .filter(|w| w.selector == sel && (w.n_landmarks, w.kappa) == (n, k))
                        .map(f),
                )
            };
            PlotRow {
                metric: cfg.metric,
                n_features: n,
                greedy: of(greedy_sel, |w| w.objective),
                rounded: of(SelectorKind::RelaxedRounded, |w| w.objective),
                relaxed: of(SelectorKind::RelaxedRounded, |w| w.f_cvx),
                random: of(SelectorKind::Random, |w| w.objective),
            }
        })
        .collect()
}

/// Runs the full experiment. Individual selection or estimation failures
/// are recorded as divergence; only setup problems return an error.
pub fn monte_carlo(cfg: &ExperimentConfig) -> Result<McOutput> {
    let setup = build_setup(cfg)?;
    let pairs = cfg.budget_pairs();
    let fixed = matches!(cfg.landmarks, LandmarkField::Ring { .. });
    let mut windows = Vec::new();
    let mut traces = Vec::new();

    for (p, &(n, kappa)) in pairs.iter().enumerate() {
        if fixed {
            let landmarks = fixed_field(&setup, n)?;
            let planned: Vec<(Candidates, WindowPlan)> = setup
                .windows
                .par_iter()
                .map(|w| {
                    let c = candidates(&setup, w, &landmarks)?;
                    let plan = plan_window(&setup, w, &c, kappa);
                    Ok((c, plan))
                })
                .collect::<Result<_>>()?;
            if let Some(r) = &planned[0].1.relaxation {
                traces.push(TraceRecord {
                    n_landmarks: n,
                    kappa,
                    window: 0,
                    rows: r.trace.clone(),
                });
            }
            let per_run: Vec<Vec<WindowRecord>> = (0..cfg.n_runs)
                .into_par_iter()
                .map(|run| {
                    let mut recs = Vec::new();
                    for (w, (c, plan)) in planned.iter().enumerate() {
                        recs.extend(run_window(&setup, w, c, &landmarks, plan, p, n, kappa, run)?);
                    }
                    Ok(recs)
                })
                .collect::<Result<_>>()?;
            windows.extend(per_run.into_iter().flatten());
        } else {
            let per_run: Vec<(Vec<WindowRecord>, Option<Vec<TraceRow>>)> = (0..cfg.n_runs)
                .into_par_iter()
                .map(|run| {
                    let landmarks = run_field(&setup, p, n, run)?;
                    let mut recs = Vec::new();
                    let mut trace = None;
                    for (w, model) in setup.windows.iter().enumerate() {
                        let c = candidates(&setup, model, &landmarks)?;
                        let plan = plan_window(&setup, model, &c, kappa);
                        if run == 0 && w == 0 {
                            trace = plan.relaxation.as_ref().map(|r| r.trace.clone());
                        }
                        recs.extend(run_window(&setup, w, &c, &landmarks, &plan, p, n, kappa, run)?);
                    }
                    Ok((recs, trace))
                })
                .collect::<Result<_>>()?;
            for (recs, trace) in per_run {
                if let Some(rows) = trace {
                    traces.push(TraceRecord {
                        n_landmarks: n,
                        kappa,
                        window: 0,
                        rows,
                    });
                }
                windows.extend(recs);
            }
        }
    }

    let runs = run_records(&windows, &cfg.selectors);
    let aggregate = aggregate(&runs, &pairs, &cfg.selectors);
    let plot = plot_rows(&windows, cfg);
    Ok(McOutput {
        n_windows: setup.windows.len(),
        windows,
        runs,
        aggregate,
        plot,
        traces,
    })
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(crate::csvio::writer(std::fs::File::create(path)?))
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "run_id",
    "selector",
    "kappa",
    "objective",
    "certificate_gap",
    "n_evals",
    "mean_rel_trans_err",
    "mean_abs_trans_err",
    "diverged",
];

/// Writes `summary.csv`, `runs.csv`, `aggregate.csv`, `traces.csv` and
/// `plot_data.csv` into `dir`.
pub fn write_outputs(out: &McOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut w = writer(&dir.join("summary.csv"))?;
    w.write_record(SUMMARY_HEADER)?;
    for r in &out.runs {
        w.write_record([
            r.run_id.to_string(),
            r.selector.to_string(),
            r.kappa.to_string(),
            fmt(r.objective),
            fmt(r.certificate_gap),
            r.n_evals.to_string(),
            fmt(r.mean_rel_trans_err),
            fmt(r.mean_abs_trans_err),
            u8::from(r.diverged).to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = writer(&dir.join("runs.csv"))?;
    w.write_record([
        "run_id",
        "selector",
        "n_landmarks",
        "kappa",
        "window",
        "n_candidates",
        "objective",
        "f_cvx",
        "certificate_gap",
        "n_evals",
        "mean_rel_trans_err",
        "mean_abs_trans_err",
        "nees",
        "diverged",
        "chosen",
    ])?;
    for r in &out.windows {
        let chosen: Vec<String> = r.chosen.iter().map(|c| c.to_string()).collect();
        w.write_record([
            r.run_id.to_string(),
            r.selector.to_string(),
            r.n_landmarks.to_string(),
            r.kappa.to_string(),
            r.window.to_string(),
            r.n_candidates.to_string(),
            fmt(r.objective),
            fmt(r.f_cvx),
            fmt(r.certificate_gap),
            r.n_evals.to_string(),
            fmt(r.mean_rel_trans_err),
            fmt(r.mean_abs_trans_err),
            fmt(r.nees),
            u8::from(r.diverged).to_string(),
            chosen.join(" "),
        ])?;
    }
    w.flush()?;

    let mut w = writer(&dir.join("aggregate.csv"))?;
    w.write_record([
        "selector",
        "n_landmarks",
        "kappa",
        "n_runs",
        "n_diverged",
        "objective_mean",
        "n_evals_mean",
        "rel_err_mean",
        "rel_err_median",
        "rel_err_std",
        "abs_err_mean",
        "abs_err_median",
        "abs_err_std",
        "rel_err_vs_random_pct",
    ])?;
    for a in &out.aggregate {
        w.write_record([
            a.selector.to_string(),
            a.n_landmarks.to_string(),
            a.kappa.to_string(),
            a.n_runs.to_string(),
            a.n_diverged.to_string(),
            fmt(a.objective_mean),
            fmt(a.n_evals_mean),
            fmt(a.rel_err_mean),
            fmt(a.rel_err_median),
            fmt(a.rel_err_std),
            fmt(a.abs_err_mean),
            fmt(a.abs_err_median),
            fmt(a.abs_err_std),
            fmt(a.rel_err_vs_random_pct),
        ])?;
    }
    w.flush()?;

    let mut w = writer(&dir.join("plot_data.csv"))?;
    w.write_record(["metric", "n_features", "greedy", "rounded", "relaxed", "random"])?;
    for p in &out.plot {
        w.write_record([
            p.metric.to_string(),
            p.n_features.to_string(),
            fmt(p.greedy),
            fmt(p.rounded),
            fmt(p.relaxed),
            fmt(p.random),
        ])?;
    }
    w.flush()?;

    let mut w = writer(&dir.join("traces.csv"))?;
    w.write_record(["n_landmarks", "kappa", "window", "iteration", "objective", "fw_gap"])?;
    for t in &out.traces {
        for row in &t.rows {
            w.write_record([
                t.n_landmarks.to_string(),
                t.kappa.to_string(),
                t.window.to_string(),
                row.iteration.to_string(),
                fmt(row.objective),
                fmt(row.fw_gap),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
