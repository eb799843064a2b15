//! Experiment configuration: JSON documents, validation with field paths and
//! the shipped presets.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::relaxation::RelaxationOptions;
use crate::selection::{binomial, BRUTE_FORCE_LIMIT};
use crate::sim::{forward_looking_extrinsic, Aabb, CameraModel, ImuParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrajectorySpec {
    Straight {
        speed: f64,
        duration: f64,
    },
    Circle {
        radius: f64,
        angular_rate: f64,
        vertical_amplitude: f64,
        vertical_freq: f64,
        duration: f64,
    },
}

impl TrajectorySpec {
    pub fn duration(&self) -> f64 {
        match self {
            TrajectorySpec::Straight { duration, .. } | TrajectorySpec::Circle { duration, .. } => *duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImuConfig {
    pub delta: f64,
    pub accel_noise_density: f64,
    pub bias_noise_density: f64,
    pub gravity: [f64; 3],
}

impl ImuConfig {
    pub fn params(&self) -> ImuParams {
        ImuParams {
            delta: self.delta,
            accel_noise_density: self.accel_noise_density,
            bias_noise_density: self.bias_noise_density,
            gravity: Vector3::from(self.gravity),
        }
    }
}

impl From<&ImuParams> for ImuConfig {
    fn from(p: &ImuParams) -> Self {
        Self {
            delta: p.delta,
            accel_noise_density: p.accel_noise_density,
            bias_noise_density: p.bias_noise_density,
            gravity: p.gravity.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub focal: f64,
    pub image_width: f64,
    pub image_height: f64,
    pub keyframe_dt: f64,
    #[serde(default)]
    pub border_margin: f64,
    /// Body-from-camera rotation, row-major.
    pub extrinsic_rotation: [[f64; 3]; 3],
    pub extrinsic_translation: [f64; 3],
}

impl CameraConfig {
    pub fn model(&self) -> CameraModel {
        let r = &self.extrinsic_rotation;
        CameraModel {
            focal: self.focal,
            image_size: (self.image_width, self.image_height),
            extrinsic_rotation: Matrix3::new(
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ),
            extrinsic_translation: Vector3::from(self.extrinsic_translation),
            keyframe_dt: self.keyframe_dt,
            border_margin: self.border_margin,
        }
    }
}

impl From<&CameraModel> for CameraConfig {
    fn from(c: &CameraModel) -> Self {
        let m = &c.extrinsic_rotation;
        Self {
            focal: c.focal,
            image_width: c.image_size.0,
            image_height: c.image_size.1,
            keyframe_dt: c.keyframe_dt,
            border_margin: c.border_margin,
            extrinsic_rotation: [
                [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
            ],
            extrinsic_translation: c.extrinsic_translation.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub position_var: f64,
    pub velocity_var: f64,
    pub bias_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LandmarkField {
    Box {
        min: [f64; 3],
        max: [f64; 3],
        score_range: [f64; 2],
    },
    Ring {
        center: [f64; 3],
        inner_radius: f64,
        outer_radius: f64,
        z_range: [f64; 2],
        score_range: [f64; 2],
    },
}

impl LandmarkField {
    pub fn score_range(&self) -> (f64, f64) {
        let r = match self {
            LandmarkField::Box { score_range, .. } | LandmarkField::Ring { score_range, .. } => score_range,
        };
        (r[0], r[1])
    }

    pub fn aabb(&self) -> Option<Aabb> {
        match self {
            LandmarkField::Box { min, max, .. } => Some(Aabb::new(Vector3::from(*min), Vector3::from(*max))),
            LandmarkField::Ring { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    GreedyMineig,
    GreedyLogdet,
    Random,
    Quality,
    Brute,
    RelaxedRounded,
}

impl SelectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            SelectorKind::GreedyMineig => "greedy-mineig",
            SelectorKind::GreedyLogdet => "greedy-logdet",
            SelectorKind::Random => "random",
            SelectorKind::Quality => "quality",
            SelectorKind::Brute => "brute",
            SelectorKind::RelaxedRounded => "relaxed-rounded",
        }
    }

    /// Whether the selection depends on the run seed.
    pub fn is_randomized(&self) -> bool {
        matches!(self, SelectorKind::Random)
    }
}

impl std::fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl RelaxationConfig {
    pub fn options(&self) -> RelaxationOptions {
        RelaxationOptions {
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        let d = RelaxationOptions::default();
        Self {
            max_iters: d.max_iters,
            tol: d.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub trajectory: TrajectorySpec,
    pub imu: ImuConfig,
    pub camera: CameraConfig,
    pub prior: PriorConfig,
    pub landmarks: LandmarkField,
    pub n_landmarks: usize,
    pub kappa: usize,
    /// `[n_landmarks, kappa]` pairs; when present each pair is run instead
    /// of the single top-level pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<[usize; 2]>>,
    pub horizon_s: f64,
    pub selectors: Vec<SelectorKind>,
    /// Metric used to score selectors that are not tied to one.
    pub metric: MetricKind,
    /// Pixel noise of the simulated measurements; the estimator whitens with it.
    pub pixel_sigma: f64,
    /// Isotropic weight of each bearing constraint inside the selection model.
    #[serde(default = "unit_weight")]
    pub selection_weight: f64,
    #[serde(default)]
    pub relaxation: RelaxationConfig,
    /// When set, track probabilities follow the landmark scores with this floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_prob_floor: Option<f64>,
    pub n_runs: usize,
    pub master_seed: u64,
    pub output_dir: String,
}

fn unit_weight() -> f64 {
    1.0
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive and finite, got {v}")))
    }
}

fn nonnegative(path: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be nonnegative and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses a JSON document, reporting the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// `(n_landmarks, kappa)` pairs to run.
    pub fn budget_pairs(&self) -> Vec<(usize, usize)> {
        match &self.sweep {
            Some(pairs) => pairs.iter().map(|p| (p[0], p[1])).collect(),
            None => vec![(self.n_landmarks, self.kappa)],
        }
    }

    pub fn output_path(&self) -> PathBuf {
        PathBuf::from(&self.output_dir)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        match &self.trajectory {
            TrajectorySpec::Straight { speed, duration } => {
                nonnegative("trajectory.speed", *speed)?;
                positive("trajectory.duration", *duration)?;
            }
            TrajectorySpec::Circle {
                radius,
                angular_rate,
                vertical_amplitude,
                vertical_freq,
                duration,
            } => {
                positive("trajectory.radius", *radius)?;
                positive("trajectory.angular_rate", *angular_rate)?;
                nonnegative("trajectory.vertical_amplitude", *vertical_amplitude)?;
                nonnegative("trajectory.vertical_freq", *vertical_freq)?;
                positive("trajectory.duration", *duration)?;
            }
        }
        self.imu
            .params()
            .validate()
            .map_err(|e| Error::config("imu", e.to_string()))?;
        self.camera
            .model()
            .validate()
            .map_err(|e| Error::config("camera", e.to_string()))?;
        let ticks = self.camera.keyframe_dt / self.imu.delta;
        if (ticks - ticks.round()).abs() > 1e-6 * ticks {
            return Err(Error::config(
                "camera.keyframe_dt",
                "must be an integer multiple of imu.delta",
            ));
        }
        positive("prior.position_var", self.prior.position_var)?;
        positive("prior.velocity_var", self.prior.velocity_var)?;
        positive("prior.bias_var", self.prior.bias_var)?;
        match &self.landmarks {
            LandmarkField::Box { min, max, .. } => {
                if (0..3).any(|i| !(min[i] < max[i])) {
                    return Err(Error::config("landmarks.max", "must exceed landmarks.min on every axis"));
                }
            }
            LandmarkField::Ring {
                inner_radius,
                outer_radius,
                z_range,
                ..
            } => {
                positive("landmarks.inner_radius", *inner_radius)?;
                if !(outer_radius > inner_radius) {
                    return Err(Error::config("landmarks.outer_radius", "must exceed inner_radius"));
                }
                if !(z_range[0] <= z_range[1]) {
                    return Err(Error::config("landmarks.z_range", "must be ordered"));
                }
            }
        }
        let (smin, smax) = self.landmarks.score_range();
        if !(smin < smax) {
            return Err(Error::config("landmarks.score_range", "must be a nonempty interval"));
        }
        positive("horizon_s", self.horizon_s)?;
        if self.horizon_s + 1e-9 < self.camera.keyframe_dt {
            return Err(Error::config("horizon_s", "must span at least one keyframe interval"));
        }
        if self.horizon_s > self.trajectory.duration() + 1e-9 {
            return Err(Error::config("horizon_s", "must not exceed the trajectory duration"));
        }
        nonnegative("pixel_sigma", self.pixel_sigma)?;
        if self.pixel_sigma == 0.0 {
            return Err(Error::config("pixel_sigma", "must be positive (it sets the vision weight)"));
        }
        positive("selection_weight", self.selection_weight)?;
        if self.selectors.is_empty() {
            return Err(Error::config("selectors", "must list at least one selector"));
        }
        if self.relaxation.max_iters == 0 {
            return Err(Error::config("relaxation.max_iters", "must be at least 1"));
        }
        positive("relaxation.tol", self.relaxation.tol)?;
        if let Some(p) = self.track_prob_floor {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::config("track_prob_floor", "must lie in [0, 1)"));
            }
        }
        if self.n_runs == 0 {
            return Err(Error::config("n_runs", "must be at least 1"));
        }
        if self.output_dir.is_empty() {
            return Err(Error::config("output_dir", "must not be empty"));
        }
        let pairs = self.budget_pairs();
        if pairs.is_empty() {
            return Err(Error::config("sweep", "must contain at least one pair"));
        }
        for (i, &(n, k)) in pairs.iter().enumerate() {
            let field = if self.sweep.is_some() {
                format!("sweep[{i}]")
            } else {
                "kappa".to_string()
            };
            if n == 0 {
                return Err(Error::config(field, "n_landmarks must be positive"));
            }
            if k > n {
                return Err(Error::config(field, format!("kappa {k} exceeds n_landmarks {n}")));
            }
            if self.sweep.is_some() && n > 64 {
                return Err(Error::config(field, "sweeps support at most 64 candidates"));
            }
            if self.selectors.contains(&SelectorKind::Brute) {
                let count = binomial(n, k);
                if count > BRUTE_FORCE_LIMIT {
                    return Err(Error::config(
                        "selectors",
                        format!("brute force over C({n}, {k}) = {count} subsets exceeds {BRUTE_FORCE_LIMIT}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn default_camera(keyframe_dt: f64) -> CameraConfig {
    let cam = CameraModel {
        keyframe_dt,
        extrinsic_rotation: forward_looking_extrinsic(),
        ..CameraModel::default()
    };
    CameraConfig::from(&cam)
}

/// Straight-line benchmark: N candidates with half of them selected.
pub fn straightline_sweep() -> ExperimentConfig {
    ExperimentConfig {
        name: "straightline-sweep".into(),
        trajectory: TrajectorySpec::Straight {
            speed: 2.0,
            duration: 2.5,
        },
        imu: ImuConfig::from(&ImuParams::default()),
        camera: default_camera(0.5),
        prior: PriorConfig {
            position_var: 1e-2,
            velocity_var: 1e-2,
            bias_var: 1e-4,
        },
        landmarks: LandmarkField::Box {
            min: [7.0, -6.0, -4.0],
            max: [25.0, 6.0, 4.0],
            score_range: [0.0, 1.0],
        },
        n_landmarks: 50,
        kappa: 25,
        sweep: Some((1..=5).map(|i| [10 * i, 5 * i]).collect()),
        horizon_s: 2.5,
        selectors: vec![
            SelectorKind::GreedyLogdet,
            SelectorKind::RelaxedRounded,
            SelectorKind::Random,
        ],
        metric: MetricKind::LogDet,
        pixel_sigma: 1.0,
        selection_weight: 1.0,
        relaxation: RelaxationConfig::default(),
        track_prob_floor: None,
        n_runs: 50,
        master_seed: 20_170_101,
        output_dir: "out/straightline-sweep".into(),
    }
}

/// Circular loop with vertical oscillation, 20 features per horizon window.
pub fn circle_montecarlo() -> ExperimentConfig {
    ExperimentConfig {
        name: "circle-montecarlo".into(),
        trajectory: TrajectorySpec::Circle {
            radius: 10.0,
            angular_rate: 0.2,
            vertical_amplitude: 1.0,
            vertical_freq: 0.5,
            duration: 60.0,
        },
        imu: ImuConfig::from(&ImuParams::default()),
        camera: default_camera(0.4),
        prior: PriorConfig {
            position_var: 1e-2,
            velocity_var: 1e-4,
            bias_var: 1e-4,
        },
        landmarks: LandmarkField::Ring {
            center: [0.0, 10.0, 0.0],
            inner_radius: 13.0,
            outer_radius: 40.0,
            z_range: [-3.0, 5.0],
            score_range: [0.0, 1.0],
        },
        n_landmarks: 400,
        kappa: 20,
        sweep: None,
        horizon_s: 2.8,
        selectors: vec![
            SelectorKind::GreedyMineig,
            SelectorKind::GreedyLogdet,
            SelectorKind::Random,
        ],
        metric: MetricKind::LogDet,
        pixel_sigma: 8.0,
        selection_weight: 1.0,
        relaxation: RelaxationConfig::default(),
        track_prob_floor: Some(0.1),
        n_runs: 50,
        master_seed: 20_170_102,
        output_dir: "out/circle-montecarlo".into(),
    }
}

pub fn presets() -> Vec<ExperimentConfig> {
    vec![straightline_sweep(), circle_montecarlo()]
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    presets().into_iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for cfg in presets() {
            cfg.validate().unwrap();
            let text = cfg.to_json();
            let back = ExperimentConfig::from_json(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn preset_contents() {
        let s = preset("straightline-sweep").unwrap();
        assert_eq!(s.budget_pairs().last(), Some(&(50, 25)));
        assert!(s.budget_pairs().iter().all(|&(n, k)| k * 2 == n));
        let c = preset("circle-montecarlo").unwrap();
        assert_eq!((c.n_runs, c.kappa), (50, 20));
        assert_eq!(c.camera.focal, 315.0);
        assert!(preset("nope").is_none());
    }

    #[test]
    fn missing_field_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(&straightline_sweep().to_json()).unwrap();
        v.as_object_mut().unwrap().remove("kappa");
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("kappa"), "{err}");
    }

    #[test]
    fn bad_values_report_paths() {
        let mut v: serde_json::Value = serde_json::from_str(&circle_montecarlo().to_json()).unwrap();
        v["imu"]["delta"] = serde_json::json!("fast");
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "imu.delta"),
            other => panic!("unexpected {other}"),
        }
        let mut c = circle_montecarlo();
        c.kappa = 500;
        assert!(matches!(c.validate(), Err(Error::Config { path, .. }) if path == "kappa"));
        let mut c = circle_montecarlo();
        c.horizon_s = -1.0;
        assert!(matches!(c.validate(), Err(Error::Config { path, .. }) if path == "horizon_s"));
        let mut c = circle_montecarlo();
        c.selectors.push(SelectorKind::Brute);
        assert!(matches!(c.validate(), Err(Error::Config { path, .. }) if path == "selectors"));
    }
}
