//! Synthetic world: planned trajectories, landmark fields and seeded noise
//! realizations for the benchmark harness.
//!
//! All randomness goes through [`SimRng`] (ChaCha8 keyed by a `u64` seed), so
//! every fixture is reproducible bit-for-bit across platforms.

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Seedable portable generator used for every randomized operation.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed (SplitMix64 finalizer over the pair).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn normal3(rng: &mut SimRng, sigma: f64) -> Vector3<f64> {
    if sigma == 0.0 {
        return Vector3::zeros();
    }
    Vector3::new(
        rng.sample::<f64, _>(StandardNormal) * sigma,
        rng.sample::<f64, _>(StandardNormal) * sigma,
        rng.sample::<f64, _>(StandardNormal) * sigma,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImuParams {
    /// IMU sampling period in seconds.
    pub delta: f64,
    /// Accelerometer white-noise density, m/(s^2 sqrt(Hz)).
    pub accel_noise_density: f64,
    /// Accelerometer bias random-walk density, m/(s^3 sqrt(Hz)).
    pub bias_noise_density: f64,
    pub gravity: Vector3<f64>,
}

impl Default for ImuParams {
    fn default() -> Self {
        Self {
            delta: 0.01,
            accel_noise_density: 0.02,
            bias_noise_density: 0.03,
            gravity: Vector3::new(0.0, 0.0, -9.81),
        }
    }
}

impl ImuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::Parameter("imu delta must be positive".into()));
        }
        if !(self.accel_noise_density >= 0.0) || !(self.bias_noise_density >= 0.0) {
            return Err(Error::Parameter("imu noise densities must be nonnegative".into()));
        }
        Ok(())
    }

    /// Discrete per-sample accelerometer standard deviation, `density / sqrt(delta)`.
    pub fn accel_sigma(&self) -> f64 {
        self.accel_noise_density / self.delta.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    /// Focal length in pixels.
    pub focal: f64,
    /// (width, height) in pixels; the principal point is the image center.
    pub image_size: (f64, f64),
    /// Rotation of the camera frame expressed in the IMU (body) frame.
    pub extrinsic_rotation: Matrix3<f64>,
    /// Camera origin expressed in the IMU frame, meters.
    pub extrinsic_translation: Vector3<f64>,
    pub keyframe_dt: f64,
    /// Pixels excluded along each image border by the visibility check.
    pub border_margin: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            focal: 315.0,
            image_size: (752.0, 480.0),
            extrinsic_rotation: forward_looking_extrinsic(),
            extrinsic_translation: Vector3::new(0.05, 0.0, 0.0),
            keyframe_dt: 0.5,
            border_margin: 0.0,
        }
    }
}

/// Camera optical axis along body +x, image x along body -y, image y along body -z.
pub fn forward_looking_extrinsic() -> Matrix3<f64> {
    Matrix3::from_columns(&[
        Vector3::new(0.0, -1.0, 0.0),
        Vector3::new(0.0, 0.0, -1.0),
        Vector3::new(1.0, 0.0, 0.0),
    ])
}

pub(crate) fn check_rotation(r: &Matrix3<f64>, tol: f64) -> bool {
    (r.transpose() * r - Matrix3::identity()).abs().max() <= tol && (r.determinant() - 1.0).abs() <= tol
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal > 0.0) {
            return Err(Error::Parameter("camera focal must be positive".into()));
        }
        if !(self.image_size.0 > 0.0 && self.image_size.1 > 0.0) {
            return Err(Error::Parameter("camera image size must be positive".into()));
        }
        if !check_rotation(&self.extrinsic_rotation, 1e-9) {
            return Err(Error::Parameter("camera extrinsic rotation is not a proper rotation".into()));
        }
        if !(self.keyframe_dt > 0.0) {
            return Err(Error::Parameter("camera keyframe_dt must be positive".into()));
        }
        Ok(())
    }
}

/// Planned motion over the horizon. Keyframe states are exactly consistent
/// with the per-tick accelerations under the Euler rule
/// `v+ = v + a d`, `p+ = p + v d + a d^2 / 2`, so noiseless IMU
/// pseudo-measurements reproduce the keyframe states exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub imu_dt: f64,
    pub ticks_per_keyframe: usize,
    pub keyframe_times: Vec<f64>,
    /// World-from-body rotation per keyframe.
    pub rotations: Vec<Matrix3<f64>>,
    pub positions: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
    /// World-from-body rotation per IMU tick, `ticks_per_keyframe` per interval.
    pub imu_subsample_rotations: Vec<Matrix3<f64>>,
    /// True world-frame acceleration per IMU tick.
    pub imu_accelerations: Vec<Vector3<f64>>,
}

impl Trajectory {
    pub fn num_keyframes(&self) -> usize {
        self.keyframe_times.len()
    }

    /// Number of keyframe intervals H.
    pub fn horizon(&self) -> usize {
        self.num_keyframes().saturating_sub(1)
    }

    /// State dimension 9(H+1).
    pub fn state_dim(&self) -> usize {
        9 * self.num_keyframes()
    }

    /// Tick indices covering the interval between keyframes `k` and `k+1`.
    pub fn tick_range(&self, k: usize) -> std::ops::Range<usize> {
        let start = k * self.ticks_per_keyframe;
        start..start + self.ticks_per_keyframe
    }

    /// Sub-trajectory made of `len` keyframes starting at `start`.
    pub fn window(&self, start: usize, len: usize) -> Result<Trajectory> {
        if len == 0 || start + len > self.num_keyframes() {
            return Err(Error::Parameter(format!(
                "window [{start}, {}) outside trajectory with {} keyframes",
                start + len,
                self.num_keyframes()
            )));
        }
        let ticks = start * self.ticks_per_keyframe..(start + len - 1) * self.ticks_per_keyframe;
        Ok(Trajectory {
            imu_dt: self.imu_dt,
            ticks_per_keyframe: self.ticks_per_keyframe,
            keyframe_times: self.keyframe_times[start..start + len].to_vec(),
            rotations: self.rotations[start..start + len].to_vec(),
            positions: self.positions[start..start + len].to_vec(),
            velocities: self.velocities[start..start + len].to_vec(),
            imu_subsample_rotations: self.imu_subsample_rotations[ticks.clone()].to_vec(),
            imu_accelerations: self.imu_accelerations[ticks].to_vec(),
        })
    }

    /// Horizontal path length, trapezoidal in the keyframe speeds.
    pub fn horizontal_path_length(&self) -> f64 {
        self.keyframe_times
            .windows(2)
            .zip(self.velocities.windows(2))
            .map(|(t, v)| {
                let s0 = v[0].xy().norm();
                let s1 = v[1].xy().norm();
                0.5 * (s0 + s1) * (t[1] - t[0])
            })
            .sum()
    }
}

fn timing(duration: f64, keyframe_dt: f64, imu_dt: f64) -> Result<(usize, usize)> {
    if !(imu_dt > 0.0 && keyframe_dt >= imu_dt && duration >= keyframe_dt) {
        return Err(Error::Parameter(format!(
            "need duration >= keyframe_dt >= imu_dt > 0, got {duration}, {keyframe_dt}, {imu_dt}"
        )));
    }
    let ratio = keyframe_dt / imu_dt;
    let ticks = ratio.round();
    if (ratio - ticks).abs() > 1e-6 * ratio {
        return Err(Error::Parameter(format!(
            "keyframe_dt {keyframe_dt} is not a multiple of imu_dt {imu_dt}"
        )));
    }
    let keyframes = (duration / keyframe_dt + 1e-9).floor() as usize + 1;
    Ok((keyframes, ticks as usize))
}

fn yaw(angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), angle).into_inner()
}

/// Builds a trajectory from analytic keyframe states and an analytic
/// acceleration profile. Per interval, the sampled accelerations are shifted
/// by an affine correction so that Euler integration lands exactly on the
/// next keyframe state.
fn assemble<FS, FA, FR>(
    keyframes: usize,
    ticks: usize,
    keyframe_dt: f64,
    imu_dt: f64,
    state: FS,
    accel: FA,
    rotation: FR,
) -> Trajectory
where
    FS: Fn(f64) -> (Vector3<f64>, Vector3<f64>),
    FA: Fn(f64) -> Vector3<f64>,
    FR: Fn(f64) -> Matrix3<f64>,
{
    let keyframe_times: Vec<f64> = (0..keyframes).map(|k| k as f64 * keyframe_dt).collect();
    let mut positions = Vec::with_capacity(keyframes);
    let mut velocities = Vec::with_capacity(keyframes);
    for &t in &keyframe_times {
        let (p, v) = state(t);
        positions.push(p);
        velocities.push(v);
    }
    let rotations = keyframe_times.iter().map(|&t| rotation(t)).collect();

    let mut imu_rot = Vec::with_capacity(ticks * (keyframes - 1));
    let mut imu_acc = Vec::with_capacity(ticks * (keyframes - 1));
    for k in 0..keyframes - 1 {
        let t0 = keyframe_times[k];
        let times: Vec<f64> = (0..ticks).map(|i| t0 + i as f64 * imu_dt).collect();
        let mut acc: Vec<Vector3<f64>> = times.iter().map(|&t| accel(t + 0.5 * imu_dt)).collect();
        let weights: Vec<f64> = (0..ticks).map(|i| (ticks - i) as f64 - 0.5).collect();

        if ticks >= 2 {
            // Target increments for v and p over the interval.
            let dv = velocities[k + 1] - velocities[k];
            let dp = positions[k + 1] - positions[k] - velocities[k] * (ticks as f64 * imu_dt);
            let sum_a: Vector3<f64> = acc.iter().sum();
            let sum_wa: Vector3<f64> = acc.iter().zip(&weights).map(|(a, w)| a * *w).sum();
            let rv = dv / imu_dt - sum_a;
            let rp = dp / (imu_dt * imu_dt) - sum_wa;
            let n = ticks as f64;
            let sw: f64 = weights.iter().sum();
            let sww: f64 = weights.iter().map(|w| w * w).sum();
            let det = n * sww - sw * sw;
            let alpha = (rv * sww - rp * sw) / det;
            let beta = (rp * n - rv * sw) / det;
            for (a, w) in acc.iter_mut().zip(&weights) {
                *a += alpha + beta * *w;
            }
        } else {
            acc[0] = (velocities[k + 1] - velocities[k]) / imu_dt;
            positions[k + 1] = positions[k] + velocities[k] * imu_dt + acc[0] * (0.5 * imu_dt * imu_dt);
        }
        imu_rot.extend(times.iter().map(|&t| rotation(t)));
        imu_acc.extend(acc);
    }

    Trajectory {
        imu_dt,
        ticks_per_keyframe: ticks,
        keyframe_times,
        rotations,
        positions,
        velocities,
        imu_subsample_rotations: imu_rot,
        imu_accelerations: imu_acc,
    }
}

/// Constant-speed motion along world +x starting at the origin, identity attitude.
pub fn make_straight_trajectory(speed: f64, duration: f64, keyframe_dt: f64, imu_dt: f64) -> Result<Trajectory> {
    let (keyframes, ticks) = timing(duration, keyframe_dt, imu_dt)?;
    let vel = Vector3::new(speed, 0.0, 0.0);
    Ok(assemble(
        keyframes,
        ticks,
        keyframe_dt,
        imu_dt,
        |t| (vel * t, vel),
        |_| Vector3::zeros(),
        |_| Matrix3::identity(),
    ))
}

/// Horizontal circle of the given radius traversed counter-clockwise from the
/// origin (heading +x, center at (0, radius)), with sinusoidal height
/// `vertical_amplitude * sin(2 pi vertical_freq t)`. The body yaw follows the
/// horizontal tangent.
pub fn make_circular_trajectory(
    radius: f64,
    angular_rate: f64,
    vertical_amplitude: f64,
    vertical_freq: f64,
    duration: f64,
    keyframe_dt: f64,
    imu_dt: f64,
) -> Result<Trajectory> {
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("circle radius must be positive, got {radius}")));
    }
    let (keyframes, ticks) = timing(duration, keyframe_dt, imu_dt)?;
    let w = angular_rate;
    let vw = 2.0 * std::f64::consts::PI * vertical_freq;
    let amp = vertical_amplitude;
    Ok(assemble(
        keyframes,
        ticks,
        keyframe_dt,
        imu_dt,
        |t| {
            let th = w * t;
            (
                Vector3::new(radius * th.sin(), radius * (1.0 - th.cos()), amp * (vw * t).sin()),
                Vector3::new(radius * w * th.cos(), radius * w * th.sin(), amp * vw * (vw * t).cos()),
            )
        },
        |t| {
            let th = w * t;
            Vector3::new(
                -radius * w * w * th.sin(),
                radius * w * w * th.cos(),
                -amp * vw * vw * (vw * t).sin(),
            )
        },
        |t| yaw(w * t),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub id: usize,
    pub position: Vector3<f64>,
    /// Synthetic appearance quality.
    pub score: f64,
    pub track_prob: f64,
}

/// Axis-aligned sampling box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

pub fn sample_landmarks(count: usize, bounds: Aabb, score_range: (f64, f64), seed: u64) -> Result<Vec<Landmark>> {
    if (0..3).any(|i| !(bounds.max[i] > bounds.min[i])) {
        return Err(Error::Parameter("landmark box is degenerate".into()));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..count)
        .map(|id| {
            let position = Vector3::from_fn(|i, _| rng.random_range(bounds.min[i]..bounds.max[i]));
            Landmark {
                id,
                position,
                score: sample_score(&mut rng, score_range),
                track_prob: 1.0,
            }
        })
        .collect())
}

fn sample_score(rng: &mut SimRng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Landmarks in a vertical annulus around `center` (uniform in area), height
/// uniform in `z_range`. Used for the walls around circular flights.
pub fn sample_landmarks_ring(
    count: usize,
    center: Vector3<f64>,
    radii: (f64, f64),
    z_range: (f64, f64),
    score_range: (f64, f64),
    seed: u64,
) -> Result<Vec<Landmark>> {
    if !(radii.0 >= 0.0 && radii.1 > radii.0 && z_range.1 > z_range.0) {
        return Err(Error::Parameter("landmark ring is degenerate".into()));
    }
    let mut rng = rng_from_seed(seed);
    let (r0sq, r1sq) = (radii.0 * radii.0, radii.1 * radii.1);
    Ok((0..count)
        .map(|id| {
            let r = rng.random_range(r0sq..r1sq).sqrt();
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            let z = rng.random_range(z_range.0..z_range.1);
            Landmark {
                id,
                position: center + Vector3::new(r * th.cos(), r * th.sin(), z),
                score: sample_score(&mut rng, score_range),
                track_prob: 1.0,
            }
        })
        .collect())
}

/// Affine map of the clamped score onto `[p_floor, 1]`.
pub fn score_to_track_prob(score: f64, score_min: f64, score_max: f64, p_floor: f64) -> Result<f64> {
    if !(score_max > score_min) {
        return Err(Error::Parameter(format!(
            "score range [{score_min}, {score_max}] is empty"
        )));
    }
    if !(0.0..1.0).contains(&p_floor) {
        return Err(Error::Parameter(format!("p_floor {p_floor} outside [0, 1)")));
    }
    let t = ((score - score_min) / (score_max - score_min)).clamp(0.0, 1.0);
    Ok(p_floor + (1.0 - p_floor) * t)
}

/// One realization of every noise source affecting a horizon window.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLog {
    /// Accelerometer white noise per IMU tick (body frame).
    pub accel_noise: Vec<Vector3<f64>>,
    /// Bias random-walk increment per keyframe interval, `b_j = b_k - eta`.
    pub bias_walk: Vec<Vector3<f64>>,
    /// Standard-normal draw whitened by the prior covariance at estimation time.
    pub prior_std_normal: [f64; 9],
    /// Residual-space noise per (keyframe, landmark), row-major by keyframe.
    pub bearing_noise: Vec<Vector3<f64>>,
    pub n_landmarks: usize,
    /// Uniform draws deciding whether each landmark's track survives.
    pub track_uniform: Vec<f64>,
}

impl MeasurementLog {
    /// A realization with every noise term and bias increment at zero and
    /// every track surviving.
    pub fn noiseless(trajectory: &Trajectory, n_landmarks: usize) -> Self {
        Self {
            accel_noise: vec![Vector3::zeros(); trajectory.imu_accelerations.len()],
            bias_walk: vec![Vector3::zeros(); trajectory.horizon()],
            prior_std_normal: [0.0; 9],
            bearing_noise: vec![Vector3::zeros(); trajectory.num_keyframes() * n_landmarks],
            n_landmarks,
            track_uniform: vec![0.0; n_landmarks],
        }
    }

    pub fn bearing(&self, keyframe: usize, landmark_index: usize) -> Vector3<f64> {
        self.bearing_noise[keyframe * self.n_landmarks + landmark_index]
    }
}

/// Draws all noise for one window. Accelerometer noise is discretized as
/// `density / sqrt(delta)`; bias-walk increments have variance
/// `bias_density^2 * dt_kj`; bearing noise is isotropic with
/// `pixel_sigma / focal` per axis.
pub fn simulate_measurement_noise(
    trajectory: &Trajectory,
    landmarks: &[Landmark],
    imu: &ImuParams,
    camera: &CameraModel,
    pixel_sigma: f64,
    seed: u64,
) -> Result<MeasurementLog> {
    imu.validate()?;
    camera.validate()?;
    if !(pixel_sigma >= 0.0) {
        return Err(Error::Parameter("pixel_sigma must be nonnegative".into()));
    }
    let mut rng = rng_from_seed(seed);
    let accel_sigma = imu.accel_sigma();
    let accel_noise = (0..trajectory.imu_accelerations.len())
        .map(|_| normal3(&mut rng, accel_sigma))
        .collect();
    let interval = trajectory.ticks_per_keyframe as f64 * trajectory.imu_dt;
    let bias_sigma = imu.bias_noise_density * interval.sqrt();
    let bias_walk = (0..trajectory.horizon()).map(|_| normal3(&mut rng, bias_sigma)).collect();
    let mut prior_std_normal = [0.0; 9];
    for v in prior_std_normal.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let bearing_sigma = pixel_sigma / camera.focal;
    let bearing_noise = (0..trajectory.num_keyframes() * landmarks.len())
        .map(|_| normal3(&mut rng, bearing_sigma))
        .collect();
    let track_uniform = (0..landmarks.len()).map(|_| rng.random::<f64>()).collect();
    Ok(MeasurementLog {
        accel_noise,
        bias_walk,
        prior_std_normal,
        bearing_noise,
        n_landmarks: landmarks.len(),
        track_uniform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn straight_line_keyframes() {
        let t = make_straight_trajectory(2.0, 2.5, 0.5, 0.01).unwrap();
        assert_eq!(t.num_keyframes(), 6);
        assert!((t.positions[5] - Vector3::new(5.0, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(t.imu_subsample_rotations.len(), 5 * 50);
        assert!(t.imu_subsample_rotations.iter().all(|r| *r == Matrix3::identity()));
    }

    #[test]
    fn straight_line_stationary() {
        let t = make_straight_trajectory(0.0, 2.0, 0.5, 0.01).unwrap();
        assert!(t.positions.iter().all(|p| *p == Vector3::zeros()));
        assert!(t.velocities.iter().all(|v| *v == Vector3::zeros()));
    }

    #[test]
    fn straight_line_unit_step() {
        let t = make_straight_trajectory(1.0, 1.0, 1.0, 0.01).unwrap();
        assert_eq!(t.num_keyframes(), 2);
        assert!(((t.positions[1] - t.positions[0]).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_timing_is_rejected() {
        assert!(make_straight_trajectory(1.0, 1.0, 0.5, 0.0).is_err());
        assert!(make_straight_trajectory(1.0, 0.2, 0.5, 0.01).is_err());
        assert!(make_straight_trajectory(1.0, 1.0, 0.005, 0.01).is_err());
        assert!(make_straight_trajectory(1.0, 1.0, 0.5, 0.03).is_err());
    }

    #[test]
    fn double_integration_reproduces_keyframes() {
        for traj in [
            make_straight_trajectory(2.0, 2.5, 0.5, 0.01).unwrap(),
            make_circular_trajectory(10.0, 0.2, 1.0, 0.1, 6.0, 0.4, 0.01).unwrap(),
        ] {
            let d = traj.imu_dt;
            for k in 0..traj.horizon() {
                let (mut p, mut v) = (traj.positions[k], traj.velocities[k]);
                for i in traj.tick_range(k) {
                    let a = traj.imu_accelerations[i];
                    p += v * d + a * (0.5 * d * d);
                    v += a * d;
                }
                assert!((p - traj.positions[k + 1]).norm() < 1e-9);
                assert!((v - traj.velocities[k + 1]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn circle_length_and_quarter_turn() {
        // 120 m: radius 10, 0.2 rad/s for 60 s.
        let t = make_circular_trajectory(10.0, 0.2, 1.0, 0.1, 60.0, 0.4, 0.01).unwrap();
        assert!((t.horizontal_path_length() - 120.0).abs() < 1e-6);

        let r = 5.0;
        let q = make_circular_trajectory(r, PI / 2.0, 0.0, 0.5, 1.0, 0.5, 0.01).unwrap();
        let last = q.num_keyframes() - 1;
        assert!((q.positions[last] - Vector3::new(r, r, 0.0)).norm() < 1e-9);
        let heading = q.rotations[last] * Vector3::x();
        assert!((heading - Vector3::y()).norm() < 1e-12);
        assert!(q.positions.iter().all(|p| p.z == 0.0));
        for r in q.rotations.iter().chain(&q.imu_subsample_rotations) {
            assert!(check_rotation(r, 1e-12));
        }
    }

    #[test]
    fn circle_rejects_nonpositive_radius() {
        assert!(make_circular_trajectory(0.0, 0.2, 0.0, 0.1, 2.0, 0.4, 0.01).is_err());
    }

    #[test]
    fn finite_difference_velocity_is_consistent() {
        let t = make_circular_trajectory(10.0, 0.2, 1.0, 0.1, 10.0, 0.4, 0.01).unwrap();
        for k in 0..t.horizon() {
            let fd = (t.positions[k + 1] - t.positions[k]) / 0.4;
            let mid = 0.5 * (t.velocities[k] + t.velocities[k + 1]);
            assert!((fd - mid).norm() <= 0.1 * mid.norm());
        }
    }

    #[test]
    fn landmarks_are_seeded_and_bounded() {
        let b = Aabb::new(Vector3::repeat(-10.0), Vector3::repeat(10.0));
        assert!(sample_landmarks(0, b, (0.0, 1.0), 3).unwrap().is_empty());
        let a = sample_landmarks(100, b, (0.0, 1.0), 7).unwrap();
        assert_eq!(a, sample_landmarks(100, b, (0.0, 1.0), 7).unwrap());
        assert!(a.iter().all(|l| b.contains(&l.position) && l.track_prob == 1.0));
        assert!(a.iter().all(|l| (0.0..1.0).contains(&l.score)));
    }

    #[test]
    fn track_prob_mapping() {
        assert_eq!(score_to_track_prob(2.0, 0.0, 2.0, 0.5).unwrap(), 1.0);
        assert_eq!(score_to_track_prob(0.0, 0.0, 2.0, 0.5).unwrap(), 0.5);
        assert!((score_to_track_prob(1.0, 0.0, 2.0, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!(score_to_track_prob(1.0, 2.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn noise_log_determinism_and_silence() {
        let traj = make_straight_trajectory(2.0, 2.5, 0.5, 0.01).unwrap();
        let lms = sample_landmarks(5, Aabb::new(Vector3::repeat(-1.0), Vector3::repeat(1.0)), (0.0, 1.0), 1).unwrap();
        let cam = CameraModel::default();
        let imu = ImuParams::default();
        let a = simulate_measurement_noise(&traj, &lms, &imu, &cam, 1.0, 11).unwrap();
        assert_eq!(a, simulate_measurement_noise(&traj, &lms, &imu, &cam, 1.0, 11).unwrap());

        let quiet = ImuParams {
            accel_noise_density: 0.0,
            bias_noise_density: 0.0,
            ..imu
        };
        let z = simulate_measurement_noise(&traj, &lms, &quiet, &cam, 0.0, 11).unwrap();
        assert!(z.accel_noise.iter().chain(&z.bias_walk).chain(&z.bearing_noise).all(|v| *v == Vector3::zeros()));
    }

    #[test]
    fn accel_noise_variance_matches_discretization() {
        let traj = make_straight_trajectory(1.0, 1000.0, 0.5, 0.01).unwrap();
        let imu = ImuParams::default();
        let log = simulate_measurement_noise(&traj, &[], &imu, &CameraModel::default(), 0.0, 5).unwrap();
        assert!(log.accel_noise.len() >= 100_000);
        let n = (log.accel_noise.len() * 3) as f64;
        let var = log.accel_noise.iter().map(|v| v.norm_squared()).sum::<f64>() / n;
        let expected = imu.accel_noise_density.powi(2) / imu.delta;
        assert!((var - expected).abs() < 0.05 * expected, "{var} vs {expected}");
    }
}
