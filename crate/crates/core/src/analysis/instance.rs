use nalgebra::Vector3;

use crate::analysis::monte_carlo::{full_trajectory, horizon_intervals, seed_path, vision_weight, window_starts};
use crate::config::{straightline_sweep, ExperimentConfig, LandmarkField};
use crate::error::{Error, Result};
use crate::imu::{accumulate_prior_info, build_imu_blocks, prior_info_from_variances, ImuBlock, InfoMatrix, Matrix9};
use crate::metrics::MetricKind;
use crate::selection::Problem;
use crate::sim::{sample_landmarks, sample_landmarks_ring, score_to_track_prob, CameraModel, ImuParams, Landmark, Trajectory};
use crate::vision::{candidate_features, FeatureDelta, FeatureMatrices};

const MAX_ATTEMPTS: u64 = 64;

/// A single-window selection instance with every piece needed to select,
/// estimate and audit.
#[derive(Debug, Clone)]
pub struct Instance {
    pub trajectory: Trajectory,
    pub imu: ImuParams,
    pub camera: CameraModel,
    pub prior: Matrix9,
    pub blocks: Vec<ImuBlock>,
    pub omega_bar: InfoMatrix,
    /// Candidate landmarks, ids `0..n` matching the feature indices.
    pub landmarks: Vec<Landmark>,
    /// Bearing factors weighted by the pixel noise, for estimation.
    pub features: Vec<FeatureMatrices>,
    /// Information contributions weighted for selection.
    pub deltas: Vec<FeatureDelta>,
}

impl Instance {
    pub fn problem(&self, kind: MetricKind) -> Problem<'_> {
        Problem::new(&self.omega_bar, &self.deltas, kind)
    }

    pub fn n_features(&self) -> usize {
        self.deltas.len()
    }
}

fn sample_pool(cfg: &ExperimentConfig, count: usize, seed: u64) -> Result<Vec<Landmark>> {
    let scores = cfg.landmarks.score_range();
    match &cfg.landmarks {
        LandmarkField::Box { .. } => {
            let bounds = cfg.landmarks.aabb().expect("box field");
            sample_landmarks(count, bounds, scores, seed)
        }
        LandmarkField::Ring {
            center,
            inner_radius,
            outer_radius,
            z_range,
            ..
        } => sample_landmarks_ring(
            count,
            Vector3::from(*center),
            (*inner_radius, *outer_radius),
            (z_range[0], z_range[1]),
            scores,
            seed,
        ),
    }
}

/// Draws `n` landmarks of the configured field that are triangulable in
/// horizon window `window` of the configured trajectory, and builds their
/// information contributions. Track probabilities follow the configured
/// score floor.
pub fn window_instance(cfg: &ExperimentConfig, n: usize, window: usize, seed: u64) -> Result<Instance> {
    let imu = cfg.imu.params();
    let camera = cfg.camera.model();
    let full = full_trajectory(cfg)?;
    let horizon = horizon_intervals(cfg);
    let starts = window_starts(full.num_keyframes(), horizon);
    let start = *starts
        .get(window)
        .ok_or_else(|| Error::Parameter(format!("window {window} out of range ({} windows)", starts.len())))?;
    let trajectory = full.window(start, horizon + 1)?;
    let prior = prior_info_from_variances(cfg.prior.position_var, cfg.prior.velocity_var, cfg.prior.bias_var)?;
    let blocks = build_imu_blocks(&trajectory, &imu)?;
    let omega_bar = accumulate_prior_info(&blocks, &prior, trajectory.horizon())?;

    let mut kept: Vec<Landmark> = Vec::with_capacity(n);
    for attempt in 0..MAX_ATTEMPTS {
        let pool = sample_pool(cfg, (4 * n).max(32), seed_path(seed, &[attempt]))?;
        for (fm, _) in candidate_features(&trajectory, &camera, &pool, 1.0)? {
            if kept.len() == n {
                break;
            }
            let mut lm = pool[fm.landmark_id].clone();
            lm.id = kept.len();
            kept.push(lm);
        }
        if kept.len() == n {
            break;
        }
    }
    if kept.len() < n {
        return Err(Error::Parameter(format!("could not find {n} triangulable landmarks")));
    }
    if let Some(floor) = cfg.track_prob_floor {
        let (smin, smax) = cfg.landmarks.score_range();
        for lm in &mut kept {
            lm.track_prob = score_to_track_prob(lm.score, smin, smax, floor)?;
        }
    }
    let (mut features, deltas): (Vec<FeatureMatrices>, Vec<FeatureDelta>) =
        candidate_features(&trajectory, &camera, &kept, cfg.selection_weight)?.into_iter().unzip();
    let weight = vision_weight(camera.focal, cfg.pixel_sigma);
    for fm in &mut features {
        fm.weight = weight;
    }
    Ok(Instance {
        trajectory,
        imu,
        camera,
        prior,
        blocks,
        omega_bar,
        landmarks: kept,
        features,
        deltas,
    })
}

/// Straight-line benchmark instance with `n` candidates.
pub fn straight_line_instance(n: usize, seed: u64) -> Result<Instance> {
    window_instance(&straightline_sweep(), n, 0, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_ids_match_feature_indices() {
        let inst = straight_line_instance(10, 3).unwrap();
        assert_eq!(inst.n_features(), 10);
        assert_eq!(inst.trajectory.num_keyframes(), 6);
        for (i, (fm, d)) in inst.features.iter().zip(&inst.deltas).enumerate() {
            assert_eq!(fm.landmark_id, i);
            assert_eq!(d.landmark_id, i);
            assert_eq!(inst.landmarks[i].id, i);
        }
        let again = straight_line_instance(10, 3).unwrap();
        assert_eq!(again.landmarks, inst.landmarks);
    }

    #[test]
    fn ring_windows_carry_track_probabilities() {
        let cfg = crate::config::circle_montecarlo();
        let inst = window_instance(&cfg, 30, 4, 8).unwrap();
        assert_eq!(inst.n_features(), 30);
        assert!(inst.deltas.iter().all(|d| (0.1..=1.0).contains(&d.track_prob)));
        assert!(inst.deltas.iter().any(|d| d.track_prob < 1.0));
        assert!(window_instance(&cfg, 30, 1000, 8).is_err());
    }
}
