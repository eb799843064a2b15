//! Predicted bearing observations and per-landmark information deltas.
//!
//! A bearing `u` observed from keyframe `c` gives the linear constraint
//!
//! ```text
//! [u]x R_cam^T t_cam = -[u]x (R_c R_cam)^T p_c + [u]x (R_c R_cam)^T rho + n
//! ```
//!
//! so each visible frame contributes a 3-row block `F_c` on the position
//! columns of frame `c` and `E_c = -F_c` on the landmark. Marginalizing the
//! landmark with a Schur complement gives
//! `Delta = F^T F - F^T E (E^T E)^-1 E^T F`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{skew, sorted_eigenvalues, symmetrize};
use crate::sim::{CameraModel, Landmark, Trajectory};

/// Relative eigenvalue threshold below which `E^T E` counts as singular.
pub const TRIANGULATION_THRESHOLD: f64 = 1e-8;

/// Unit bearing of `landmark` in the camera frame, or `None` when the point
/// is behind the camera or projects outside the image.
pub fn predict_bearing(
    rotation: &Matrix3<f64>,
    position: &Vector3<f64>,
    camera: &CameraModel,
    landmark: &Vector3<f64>,
) -> Option<Vector3<f64>> {
    let r_cam = rotation * camera.extrinsic_rotation;
    let t_cam = position + rotation * camera.extrinsic_translation;
    let p = r_cam.transpose() * (landmark - t_cam);
    if p.z <= 0.0 {
        return None;
    }
    let (w, h) = camera.image_size;
    let u = camera.focal * p.x / p.z + 0.5 * w;
    let v = camera.focal * p.y / p.z + 0.5 * h;
    let m = camera.border_margin;
    if u <= m || u >= w - m || v <= m || v >= h - m {
        return None;
    }
    Some(p.normalize())
}

/// Stacked vision model of one landmark over the frames where it is visible.
#[derive(Debug, Clone)]
pub struct FeatureMatrices {
    pub landmark_id: usize,
    pub visible_frames: Vec<usize>,
    pub bearings: Vec<Vector3<f64>>,
    /// World-from-camera rotation per visible frame.
    pub camera_rotations: Vec<Matrix3<f64>>,
    /// `3 n x 9(H+1)`.
    pub f: DMatrix<f64>,
    /// `3 n x 3`.
    pub e: DMatrix<f64>,
    /// Isotropic information weight of each bearing constraint.
    pub weight: f64,
}

impl FeatureMatrices {
    pub fn n_frames(&self) -> usize {
        self.visible_frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visible_frames.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.f.ncols()
    }

    /// `E_c = [u_c]x (R^W_cam,c)^T` for the `idx`-th visible frame.
    pub fn e_block(&self, idx: usize) -> Matrix3<f64> {
        skew(&self.bearings[idx]) * self.camera_rotations[idx].transpose()
    }

    /// Keeps only the observations up to and including keyframe `last_frame`.
    pub fn truncated(&self, last_frame: usize) -> FeatureMatrices {
        let keep = self.visible_frames.iter().take_while(|&&f| f <= last_frame).count();
        let mut out = FeatureMatrices {
            landmark_id: self.landmark_id,
            visible_frames: self.visible_frames[..keep].to_vec(),
            bearings: self.bearings[..keep].to_vec(),
            camera_rotations: self.camera_rotations[..keep].to_vec(),
            f: DMatrix::zeros(0, 0),
            e: DMatrix::zeros(0, 0),
            weight: self.weight,
        };
        out.f = self.f.rows(0, 3 * keep).into_owned();
        out.e = self.e.rows(0, 3 * keep).into_owned();
        out
    }

    /// Constant left-hand side `[u]x R_cam^T t_cam` per visible frame.
    pub fn measurement_offset(&self, camera: &CameraModel) -> DVector<f64> {
        let rt = camera.extrinsic_rotation.transpose() * camera.extrinsic_translation;
        let mut z = DVector::zeros(3 * self.n_frames());
        for (i, u) in self.bearings.iter().enumerate() {
            z.fixed_rows_mut::<3>(3 * i).copy_from(&(skew(u) * rt));
        }
        z
    }

    /// `Q = I - E (E^T E)^-1 E^T`, the projector onto the complement of the
    /// landmark directions.
    pub fn schur_projector(&self) -> Result<DMatrix<f64>> {
        let ete = self.e.transpose() * &self.e;
        let chol = ete
            .cholesky()
            .ok_or(Error::Degenerate(self.landmark_id))?;
        let n = self.e.nrows();
        let proj = &self.e * chol.solve(&self.e.transpose());
        let mut q = DMatrix::identity(n, n) - proj;
        symmetrize(&mut q);
        Ok(q)
    }
}

/// Bearing blocks for every keyframe where the landmark is visible.
pub fn build_feature_matrices(trajectory: &Trajectory, camera: &CameraModel, landmark: &Landmark) -> Result<FeatureMatrices> {
    if trajectory.num_keyframes() == 0 {
        return Err(Error::Parameter("empty trajectory".into()));
    }
    let mut frames = Vec::new();
    let mut bearings = Vec::new();
    let mut cam_rots = Vec::new();
    for (c, (r, p)) in trajectory.rotations.iter().zip(&trajectory.positions).enumerate() {
        if let Some(u) = predict_bearing(r, p, camera, &landmark.position) {
            frames.push(c);
            bearings.push(u);
            cam_rots.push(r * camera.extrinsic_rotation);
        }
    }
    let n = frames.len();
    let dim = trajectory.state_dim();
    let mut f = DMatrix::zeros(3 * n, dim);
    let mut e = DMatrix::zeros(3 * n, 3);
    for (i, &c) in frames.iter().enumerate() {
        let block = skew(&bearings[i]) * cam_rots[i].transpose();
        f.view_mut((3 * i, 9 * c), (3, 3)).copy_from(&(-block));
        e.view_mut((3 * i, 0), (3, 3)).copy_from(&block);
    }
    Ok(FeatureMatrices {
        landmark_id: landmark.id,
        visible_frames: frames,
        bearings,
        camera_rotations: cam_rots,
        f,
        e,
        weight: 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Triangulability {
    Ok { condition_number: f64 },
    Degenerate,
}

impl Triangulability {
    pub fn is_ok(&self) -> bool {
        matches!(self, Triangulability::Ok { .. })
    }
}

pub fn triangulability(fm: &FeatureMatrices) -> Triangulability {
    if fm.n_frames() < 2 {
        return Triangulability::Degenerate;
    }
    let ev = sorted_eigenvalues(&(fm.e.transpose() * &fm.e));
    let (lo, hi) = (ev[0], ev[2]);
    if hi > 0.0 && lo > TRIANGULATION_THRESHOLD * hi {
        Triangulability::Ok {
            condition_number: hi / lo,
        }
    } else {
        Triangulability::Degenerate
    }
}

/// Information contribution of one landmark after marginalizing it.
#[derive(Debug, Clone)]
pub struct FeatureDelta {
    pub landmark_id: usize,
    pub delta: DMatrix<f64>,
    pub track_prob: f64,
    pub n_frames: usize,
}

pub fn feature_delta(fm: &FeatureMatrices, track_prob: f64) -> Result<FeatureDelta> {
    if !triangulability(fm).is_ok() {
        return Err(Error::Degenerate(fm.landmark_id));
    }
    if !(0.0..=1.0).contains(&track_prob) {
        return Err(Error::Parameter(format!("track probability {track_prob} outside [0, 1]")));
    }
    let ete = fm.e.transpose() * &fm.e;
    let chol = ete.cholesky().ok_or(Error::Degenerate(fm.landmark_id))?;
    let etf = fm.e.transpose() * &fm.f;
    let mut delta = fm.f.transpose() * &fm.f - etf.transpose() * chol.solve(&etf);
    delta *= fm.weight;
    symmetrize(&mut delta);
    Ok(FeatureDelta {
        landmark_id: fm.landmark_id,
        delta,
        track_prob,
        n_frames: fm.n_frames(),
    })
}

/// Feature matrices and deltas for every triangulable landmark, in input order.
pub fn candidate_features(
    trajectory: &Trajectory,
    camera: &CameraModel,
    landmarks: &[Landmark],
    weight: f64,
) -> Result<Vec<(FeatureMatrices, FeatureDelta)>> {
    let mut out = Vec::new();
    for lm in landmarks {
        let mut fm = build_feature_matrices(trajectory, camera, lm)?;
        fm.weight = weight;
        if !triangulability(&fm).is_ok() {
            continue;
        }
        let delta = feature_delta(&fm, lm.track_prob)?;
        out.push((fm, delta));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{forward_looking_extrinsic, make_straight_trajectory};
    use nalgebra::DVector;

    fn landmark(p: Vector3<f64>) -> Landmark {
        Landmark {
            id: 0,
            position: p,
            score: 1.0,
            track_prob: 1.0,
        }
    }

    #[test]
    fn extrinsic_is_a_rotation() {
        let r = forward_looking_extrinsic();
        assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn on_axis_and_behind() {
        let cam = CameraModel {
            extrinsic_translation: Vector3::zeros(),
            ..CameraModel::default()
        };
        let (r, p) = (Matrix3::identity(), Vector3::zeros());
        let u = predict_bearing(&r, &p, &cam, &Vector3::new(5.0, 0.0, 0.0)).unwrap();
        assert!((u - Vector3::z()).norm() < 1e-15);
        assert!(predict_bearing(&r, &p, &cam, &Vector3::new(-5.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn frustum_boundary() {
        let cam = CameraModel {
            extrinsic_translation: Vector3::zeros(),
            ..CameraModel::default()
        };
        let (r, p) = (Matrix3::identity(), Vector3::zeros());
        // Horizontal half-width in normalized coordinates: 376 / 315.
        let half = 376.0 / 315.0;
        let depth = 5.0;
        // Camera x maps to body -y.
        let inside = Vector3::new(depth, -(half - 1e-6) * depth, 0.0);
        let outside = Vector3::new(depth, -(half + 1e-6) * depth, 0.0);
        assert!(predict_bearing(&r, &p, &cam, &inside).is_some());
        assert!(predict_bearing(&r, &p, &cam, &outside).is_none());
    }

    #[test]
    fn never_visible_is_empty() {
        let traj = make_straight_trajectory(2.0, 2.5, 0.5, 0.01).unwrap();
        let fm = build_feature_matrices(&traj, &CameraModel::default(), &landmark(Vector3::new(-20.0, 0.0, 0.0))).unwrap();
        assert!(fm.is_empty());
        assert_eq!(fm.f.nrows(), 0);
        assert_eq!(triangulability(&fm), Triangulability::Degenerate);
        assert!(matches!(feature_delta(&fm, 1.0), Err(Error::Degenerate(0))));
    }

    #[test]
    fn single_frame_structure_and_degeneracy() {
        let traj = make_straight_trajectory(2.0, 2.5, 0.5, 0.01).unwrap();
        let fm = build_feature_matrices(&traj, &CameraModel::default(), &landmark(Vector3::new(20.0, 3.0, 1.0)))
            .unwrap()
            .truncated(0);
        assert_eq!(fm.n_frames(), 1);
        let nonzero_blocks = (0..traj.num_keyframes() * 3)
            .filter(|b| fm.f.columns(3 * b, 3).iter().any(|v| *v != 0.0))
            .count();
        assert_eq!(nonzero_blocks, 1);
        assert_eq!(triangulability(&fm), Triangulability::Degenerate);
    }

    #[test]
    fn zero_baseline_is_degenerate() {
        let traj = make_straight_trajectory(0.0, 1.0, 0.5, 0.01).unwrap();
        let fm = build_feature_matrices(&traj, &CameraModel::default(), &landmark(Vector3::new(10.0, 1.0, 0.5))).unwrap();
        assert_eq!(fm.n_frames(), 3);
        assert_eq!(triangulability(&fm), Triangulability::Degenerate);
    }

    #[test]
    fn one_meter_baseline_is_ok() {
        let traj = make_straight_trajectory(2.0, 0.5, 0.5, 0.01).unwrap();
        let fm = build_feature_matrices(&traj, &CameraModel::default(), &landmark(Vector3::new(5.0, 1.5, 0.5))).unwrap();
        assert_eq!(fm.n_frames(), 2);
        assert!(triangulability(&fm).is_ok());
    }

    #[test]
    fn exact_geometry_has_zero_residual() {
        let traj = crate::sim::make_circular_trajectory(10.0, 0.3, 1.0, 0.2, 3.0, 0.5, 0.01).unwrap();
        let cam = CameraModel::default();
        let lm = landmark(Vector3::new(12.0, 4.0, 0.7));
        let fm = build_feature_matrices(&traj, &cam, &lm).unwrap();
        assert!(fm.n_frames() >= 2);
        let mut x = DVector::zeros(traj.state_dim());
        for k in 0..traj.num_keyframes() {
            x.fixed_rows_mut::<3>(9 * k).copy_from(&traj.positions[k]);
            x.fixed_rows_mut::<3>(9 * k + 3).copy_from(&traj.velocities[k]);
        }
        let rho = DVector::from_column_slice(lm.position.as_slice());
        let residual = fm.measurement_offset(&cam) - &fm.f * x - &fm.e * rho;
        assert!(residual.amax() < 1e-10);
        for i in 0..fm.n_frames() {
            let c = fm.visible_frames[i];
            let fb = fm.f.view((3 * i, 9 * c), (3, 3)).into_owned();
            assert_eq!(fb, -fm.e_block(i));
        }
    }

    #[test]
    fn delta_is_psd_and_position_only() {
        let traj = make_straight_trajectory(2.0, 2.5, 0.5, 0.01).unwrap();
        let fm = build_feature_matrices(&traj, &CameraModel::default(), &landmark(Vector3::new(15.0, 2.0, -1.0))).unwrap();
        let d = feature_delta(&fm, 1.0).unwrap();
        let ev = sorted_eigenvalues(&d.delta);
        let norm = ev[ev.len() - 1];
        assert!(ev[0] >= -1e-9 * norm);
        for c in 0..d.delta.ncols() {
            if c % 9 >= 3 {
                assert!(d.delta.column(c).iter().all(|v| *v == 0.0));
                assert!(d.delta.row(c).iter().all(|v| *v == 0.0));
            }
        }
        // Translating every visible frame together is unobservable.
        let mut v = DVector::zeros(traj.state_dim());
        for k in 0..traj.num_keyframes() {
            v[9 * k] = 1.0;
        }
        assert!((&d.delta * &v).norm() < 1e-9 * norm);
        let rank = ev.iter().filter(|&&e| e > 1e-9 * norm).count();
        assert!(rank <= 3 * fm.n_frames() - 3);
    }
}
