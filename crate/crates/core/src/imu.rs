//! Linear IMU model between consecutive keyframes and the horizon
//! information matrix built from it.
//!
//! The state of keyframe `k` is the 9-vector `[p_k, v_k, b_k]` (position,
//! velocity, accelerometer bias); the horizon state stacks these frame-major.
//! With rotations known from gyroscope integration, preintegrating the
//! accelerometer between frames `k` and `j` yields the linear measurement
//!
//! ```text
//! z_kj = A_kj x + eta_kj,
//! z^p = p_j - p_k - v_k dt_kj + N_kj b_k + eta^p
//! z^v = v_j - v_k + M_kj b_k + eta^v
//! z^b = b_j - b_k + eta^b
//! ```
//!
//! with `N_kj = sum_i (j - i - 1/2) R_i d^2` and `M_kj = sum_i R_i d`.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, min_eigenvalue, symmetrize, trace};
use crate::sim::{ImuParams, Trajectory};

pub type Matrix9 = SMatrix<f64, 9, 9>;
pub type Vector9 = SVector<f64, 9>;

/// Relative jitter used when inverting a numerically singular noise covariance.
pub const NOISE_JITTER: f64 = 1e-12;

/// Linear IMU factor between frames `k` and `j = k + 1`.
#[derive(Debug, Clone)]
pub struct ImuBlock {
    pub frame_pair: (usize, usize),
    /// `A_kj`, 9 x 9(H+1); nonzero only on the columns of frames k and j.
    pub coeff_matrix: DMatrix<f64>,
    pub noise_cov: Matrix9,
    pub noise_info: Matrix9,
    pub delta_kj: f64,
    pub n_kj: Matrix3<f64>,
    pub m_kj: Matrix3<f64>,
}

/// Discrete bias random-walk covariance `bias_density^2 * dt_kj * I`.
pub fn bias_walk_cov(imu: &ImuParams, delta_kj: f64) -> Matrix3<f64> {
    Matrix3::identity() * (imu.bias_noise_density.powi(2) * delta_kj)
}

/// Noise coefficient matrix `C` (6 x 3m) mapping per-tick accelerometer
/// noise onto the position and velocity preintegration noise.
pub fn noise_coefficients(rotations: &[Matrix3<f64>], delta: f64) -> DMatrix<f64> {
    let m = rotations.len();
    let mut c = DMatrix::zeros(6, 3 * m);
    for (i, r) in rotations.iter().enumerate() {
        let w = (m - i) as f64 - 0.5;
        c.view_mut((0, 3 * i), (3, 3)).copy_from(&(r * (w * delta * delta)));
        c.view_mut((3, 3 * i), (3, 3)).copy_from(&(r * delta));
    }
    c
}

/// Builds `A_kj` and the noise information of the IMU factor between
/// consecutive keyframes `k` and `j`.
///
/// The (p, v) block of the noise covariance is `sigma^2 C C^T`, computed from
/// the explicit product rather than from a closed form.
pub fn build_imu_block(
    trajectory: &Trajectory,
    k: usize,
    j: usize,
    imu: &ImuParams,
    bias_walk_cov: &Matrix3<f64>,
) -> Result<ImuBlock> {
    imu.validate()?;
    if j != k + 1 || j >= trajectory.num_keyframes() {
        return Err(Error::Parameter(format!(
            "imu block needs consecutive frames inside the horizon, got ({k}, {j})"
        )));
    }
    let ticks = trajectory.tick_range(k);
    if ticks.end > trajectory.imu_subsample_rotations.len() {
        return Err(Error::Dimension("missing per-tick rotations".into()));
    }
    let rotations = &trajectory.imu_subsample_rotations[ticks];
    let m = rotations.len();
    let d = imu.delta;
    let delta_kj = m as f64 * d;

    let mut n_kj = Matrix3::zeros();
    let mut m_kj = Matrix3::zeros();
    for (i, r) in rotations.iter().enumerate() {
        let w = (m - i) as f64 - 0.5;
        n_kj += r * (w * d * d);
        m_kj += r * d;
    }

    let dim = trajectory.state_dim();
    let mut a = DMatrix::zeros(9, dim);
    let ck = 9 * k;
    let cj = 9 * j;
    let eye = Matrix3::<f64>::identity();
    a.view_mut((0, ck), (3, 3)).copy_from(&(-eye));
    a.view_mut((0, ck + 3), (3, 3)).copy_from(&(-eye * delta_kj));
    a.view_mut((0, ck + 6), (3, 3)).copy_from(&n_kj);
    a.view_mut((3, ck + 3), (3, 3)).copy_from(&(-eye));
    a.view_mut((3, ck + 6), (3, 3)).copy_from(&m_kj);
    a.view_mut((6, ck + 6), (3, 3)).copy_from(&(-eye));
    for r in 0..9 {
        a[(r, cj + r)] = 1.0;
    }

    let c = noise_coefficients(rotations, d);
    let sigma2 = imu.accel_sigma().powi(2);
    let cct = &c * c.transpose();
    let mut cov = Matrix9::zeros();
    for r in 0..6 {
        for s in 0..6 {
            cov[(r, s)] = sigma2 * cct[(r, s)];
        }
    }
    cov.fixed_view_mut::<3, 3>(6, 6).copy_from(bias_walk_cov);

    let noise_info = invert_noise(&cov)?;
    Ok(ImuBlock {
        frame_pair: (k, j),
        coeff_matrix: a,
        noise_cov: cov,
        noise_info,
        delta_kj,
        n_kj,
        m_kj,
    })
}

fn invert_noise(cov: &Matrix9) -> Result<Matrix9> {
    let dyn_cov = DMatrix::from_column_slice(9, 9, cov.as_slice());
    let chol = cholesky_with_jitter(&dyn_cov, NOISE_JITTER).map_err(|_| {
        Error::Model(
            "imu noise covariance is singular (zero noise densities?); regularize the noise model".into(),
        )
    })?;
    let inv = chol.inverse();
    let mut info = Matrix9::from_column_slice(inv.as_slice());
    info = 0.5 * (info + info.transpose());
    if !info.iter().all(|v| v.is_finite()) {
        return Err(Error::Model("imu noise information is not finite".into()));
    }
    Ok(info)
}

/// One IMU block per consecutive keyframe pair of the trajectory, using the
/// default bias random-walk covariance.
pub fn build_imu_blocks(trajectory: &Trajectory, imu: &ImuParams) -> Result<Vec<ImuBlock>> {
    let interval = trajectory.ticks_per_keyframe as f64 * imu.delta;
    let bw = bias_walk_cov(imu, interval);
    (0..trajectory.horizon())
        .map(|k| build_imu_block(trajectory, k, k + 1, imu, &bw))
        .collect()
}

/// Dense symmetric information matrix over the stacked horizon state.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    data: DMatrix<f64>,
}

impl InfoMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: DMatrix::zeros(dim, dim),
        }
    }

    /// Wraps a square matrix, symmetrizing it.
    pub fn from_matrix(mut data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension(format!(
                "information matrix must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        symmetrize(&mut data);
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.data)
    }

    /// Positive definite in the sense that a Cholesky factorization succeeds.
    pub fn is_positive_definite(&self) -> bool {
        self.data.clone().cholesky().is_some()
    }

    /// Adds `A^T W A`.
    pub fn add_factor(&mut self, block: &ImuBlock) -> Result<()> {
        if block.coeff_matrix.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "imu block spans {} columns, information matrix has dimension {}",
                block.coeff_matrix.ncols(),
                self.dim()
            )));
        }
        let (k, j) = block.frame_pair;
        // Only the columns of frames k and j are nonzero.
        let cols = [9 * k, 9 * j];
        let w = DMatrix::from_column_slice(9, 9, block.noise_info.as_slice());
        for &ca in &cols {
            let aa = block.coeff_matrix.columns(ca, 9);
            let wa = &w * aa;
            for &cb in &cols {
                let ab = block.coeff_matrix.columns(cb, 9);
                let contrib = ab.transpose() * &wa;
                let mut dst = self.data.view_mut((cb, ca), (9, 9));
                dst += contrib;
            }
        }
        symmetrize(&mut self.data);
        Ok(())
    }

    pub fn add_prior(&mut self, frame: usize, prior: &Matrix9) -> Result<()> {
        if 9 * frame + 9 > self.dim() {
            return Err(Error::Dimension(format!("prior frame {frame} outside horizon")));
        }
        let p = DMatrix::from_column_slice(9, 9, prior.as_slice());
        let mut dst = self.data.view_mut((9 * frame, 9 * frame), (9, 9));
        dst += p;
        symmetrize(&mut self.data);
        Ok(())
    }
}

/// `Omega_bar = sum_kj A_kj^T W_kj A_kj + embed(prior_k at frame 0)`.
pub fn accumulate_prior_info(blocks: &[ImuBlock], prior_k: &Matrix9, horizon: usize) -> Result<InfoMatrix> {
    let dim = 9 * (horizon + 1);
    let mut info = InfoMatrix::zeros(dim);
    for block in blocks {
        if block.frame_pair.1 > horizon {
            return Err(Error::Dimension(format!(
                "imu block {:?} outside horizon {horizon}",
                block.frame_pair
            )));
        }
        info.add_factor(block)?;
    }
    info.add_prior(0, prior_k)?;
    Ok(info)
}

/// Block-diagonal prior information from per-block variances.
pub fn prior_info_from_variances(position_var: f64, velocity_var: f64, bias_var: f64) -> Result<Matrix9> {
    if !(position_var > 0.0 && velocity_var > 0.0 && bias_var > 0.0) {
        return Err(Error::Parameter("prior variances must be positive".into()));
    }
    let mut m = Matrix9::zeros();
    for i in 0..3 {
        m[(i, i)] = 1.0 / position_var;
        m[(i + 3, i + 3)] = 1.0 / velocity_var;
        m[(i + 6, i + 6)] = 1.0 / bias_var;
    }
    Ok(m)
}

/// Ratio `lambda_min / trace` used to flag matrices that are PSD but not PD.
pub fn relative_min_eigenvalue(info: &InfoMatrix) -> f64 {
    let t = trace(info.matrix());
    if t == 0.0 {
        return 0.0;
    }
    info.min_eigenvalue() / t
}

/// Simulated accelerometer readings `R_i^T (a_i - g) + b_k + eta_i` for the
/// given true biases (one per keyframe) and per-tick noise.
pub fn accelerometer_readings(
    trajectory: &Trajectory,
    imu: &ImuParams,
    biases: &[Vector3<f64>],
    noise: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>> {
    let n = trajectory.imu_accelerations.len();
    if noise.len() != n || biases.len() != trajectory.num_keyframes() {
        return Err(Error::Dimension("accelerometer inputs do not match the trajectory".into()));
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..trajectory.horizon() {
        for i in trajectory.tick_range(k) {
            let r = &trajectory.imu_subsample_rotations[i];
            out.push(r.transpose() * (trajectory.imu_accelerations[i] - imu.gravity) + biases[k] + noise[i]);
        }
    }
    Ok(out)
}

/// Preintegrated measurement `z_kj = [z^p, z^v, z^b]` from accelerometer
/// readings over the interval starting at keyframe `k`.
pub fn preintegrated_measurement(
    trajectory: &Trajectory,
    k: usize,
    imu: &ImuParams,
    readings: &[Vector3<f64>],
) -> Vector9 {
    let ticks = trajectory.tick_range(k);
    let m = ticks.len();
    let d = imu.delta;
    let mut zp = Vector3::zeros();
    let mut zv = imu.gravity * (m as f64 * d);
    for (idx, i) in ticks.enumerate() {
        let w = (m - idx) as f64 - 0.5;
        let ra = trajectory.imu_subsample_rotations[i] * readings[i];
        zp += (imu.gravity + ra) * (w * d * d);
        zv += ra * d;
    }
    let mut z = Vector9::zeros();
    z.fixed_rows_mut::<3>(0).copy_from(&zp);
    z.fixed_rows_mut::<3>(3).copy_from(&zv);
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{make_circular_trajectory, make_straight_trajectory};
    use nalgebra::{DVector, Rotation3};
    use rand::{Rng, SeedableRng};

    fn random_rotations(m: usize, seed: u64) -> Vec<Matrix3<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| {
                let axis = Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                Rotation3::new(axis * 4.0).into_inner()
            })
            .collect()
    }

    #[test]
    fn single_tick_coefficients() {
        let d = 0.01;
        let traj = make_straight_trajectory(1.0, 0.01, 0.01, d).unwrap();
        let imu = ImuParams::default();
        let b = build_imu_block(&traj, 0, 1, &imu, &bias_walk_cov(&imu, d)).unwrap();
        assert!((b.n_kj - Matrix3::identity() * (0.5 * d * d)).norm() < 1e-18);
        assert!((b.m_kj - Matrix3::identity() * d).norm() < 1e-18);
        assert!((b.delta_kj - d).abs() < 1e-18);
    }

    #[test]
    fn identity_rotation_cct_closed_form() {
        let d = 0.01;
        let m = 25;
        let c = noise_coefficients(&vec![Matrix3::identity(); m], d);
        let cct = &c * c.transpose();
        let s2: f64 = (0..m).map(|i| (m as f64 - i as f64 - 0.5).powi(2)).sum();
        let s1: f64 = (0..m).map(|i| m as f64 - i as f64 - 0.5).sum();
        for r in 0..3 {
            for s in 0..3 {
                let eye = if r == s { 1.0 } else { 0.0 };
                assert!((cct[(r, s)] - eye * s2 * d.powi(4)).abs() < 1e-12 * s2 * d.powi(4));
                assert!((cct[(r, s + 3)] - eye * s1 * d.powi(3)).abs() < 1e-12 * s1 * d.powi(3));
                // Direct expansion gives m d^2 in the velocity block (the
                // printed (m - 1) d^2 does not match the product).
                assert!((cct[(r + 3, s + 3)] - eye * m as f64 * d * d).abs() < 1e-12 * m as f64 * d * d);
            }
        }
    }

    #[test]
    fn random_rotation_cct_matches_block_sums() {
        let d = 0.01;
        let rots = random_rotations(25, 3);
        let c = noise_coefficients(&rots, d);
        let cct = &c * c.transpose();
        let m = rots.len();
        // Oracle: sum of per-tick outer products.
        let mut oracle = DMatrix::<f64>::zeros(6, 6);
        for (i, r) in rots.iter().enumerate() {
            let w = (m - i) as f64 - 0.5;
            let mut col = DMatrix::zeros(6, 3);
            col.view_mut((0, 0), (3, 3)).copy_from(&(r * (w * d * d)));
            col.view_mut((3, 0), (3, 3)).copy_from(&(r * d));
            oracle += &col * col.transpose();
        }
        assert!((cct - oracle).abs().max() < 1e-12);
    }

    #[test]
    fn zero_densities_are_a_model_error() {
        let traj = make_straight_trajectory(1.0, 1.0, 0.5, 0.01).unwrap();
        let imu = ImuParams {
            accel_noise_density: 0.0,
            bias_noise_density: 0.0,
            ..ImuParams::default()
        };
        let err = build_imu_block(&traj, 0, 1, &imu, &Matrix3::zeros()).unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }

    #[test]
    fn coefficient_layout() {
        let traj = make_straight_trajectory(2.0, 2.5, 0.5, 0.01).unwrap();
        let imu = ImuParams::default();
        let blocks = build_imu_blocks(&traj, &imu).unwrap();
        let b = &blocks[2];
        let a = &b.coeff_matrix;
        for c in 0..a.ncols() {
            let frame = c / 9;
            if frame != 2 && frame != 3 {
                assert!(a.column(c).iter().all(|v| *v == 0.0));
            }
        }
        assert!(b.noise_info.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn prior_only_information() {
        let prior = prior_info_from_variances(1e-2, 1e-2, 1e-4).unwrap();
        let info = accumulate_prior_info(&[], &prior, 2).unwrap();
        assert_eq!(info.dim(), 27);
        assert!(!info.is_positive_definite());
        for r in 0..27 {
            for c in 0..27 {
                let expected = if r < 9 && c < 9 { prior[(r, c)] } else { 0.0 };
                assert_eq!(info.matrix()[(r, c)], expected);
            }
        }
    }

    #[test]
    fn one_block_with_prior_is_pd() {
        let traj = make_straight_trajectory(2.0, 0.5, 0.5, 0.01).unwrap();
        let imu = ImuParams::default();
        let blocks = build_imu_blocks(&traj, &imu).unwrap();
        let prior = prior_info_from_variances(1e-2, 1e-2, 1e-4).unwrap();
        assert_eq!(prior[(0, 0)], 1e2);
        assert_eq!(prior[(6, 6)], 1e4);
        let info = accumulate_prior_info(&blocks, &prior, 1).unwrap();
        assert!(info.is_positive_definite());
        let ev = info.matrix().clone().symmetric_eigenvalues();
        let cond = ev.max() / ev.min();
        assert!(cond.is_finite() && cond > 1.0);
    }

    #[test]
    fn accumulation_order_and_additivity() {
        let traj = make_circular_trajectory(10.0, 0.2, 1.0, 0.1, 2.0, 0.4, 0.01).unwrap();
        let imu = ImuParams::default();
        let blocks = build_imu_blocks(&traj, &imu).unwrap();
        let prior = prior_info_from_variances(1e-2, 1e-2, 1e-4).unwrap();
        let h = traj.horizon();
        let fwd = accumulate_prior_info(&blocks, &prior, h).unwrap();
        let rev: Vec<_> = blocks.iter().rev().cloned().collect();
        let bwd = accumulate_prior_info(&rev, &prior, h).unwrap();
        let scale = fwd.matrix().abs().max();
        assert!((fwd.matrix() - bwd.matrix()).abs().max() <= 1e-12 * scale);

        // Dense oracle: sum of A^T W A.
        let mut dense = DMatrix::<f64>::zeros(traj.state_dim(), traj.state_dim());
        for b in &blocks {
            let w = DMatrix::from_column_slice(9, 9, b.noise_info.as_slice());
            dense += b.coeff_matrix.transpose() * w * &b.coeff_matrix;
        }
        let mut p = dense.view_mut((0, 0), (9, 9));
        p += DMatrix::from_column_slice(9, 9, prior.as_slice());
        assert!((fwd.matrix() - dense).abs().max() <= 1e-10 * scale);
        assert!(relative_min_eigenvalue(&fwd) > 0.0);
    }

    #[test]
    fn noiseless_preintegration_matches_linear_model() {
        let traj = make_circular_trajectory(10.0, 0.2, 1.0, 0.1, 2.0, 0.4, 0.01).unwrap();
        let imu = ImuParams::default();
        let blocks = build_imu_blocks(&traj, &imu).unwrap();
        let biases: Vec<Vector3<f64>> = vec![Vector3::new(0.02, -0.01, 0.03); traj.num_keyframes()];
        let noise = vec![Vector3::zeros(); traj.imu_accelerations.len()];
        let readings = accelerometer_readings(&traj, &imu, &biases, &noise).unwrap();
        let mut x = DVector::zeros(traj.state_dim());
        for k in 0..traj.num_keyframes() {
            x.fixed_rows_mut::<3>(9 * k).copy_from(&traj.positions[k]);
            x.fixed_rows_mut::<3>(9 * k + 3).copy_from(&traj.velocities[k]);
            x.fixed_rows_mut::<3>(9 * k + 6).copy_from(&biases[k]);
        }
        for (k, b) in blocks.iter().enumerate() {
            let z = preintegrated_measurement(&traj, k, &imu, &readings);
            let pred = &b.coeff_matrix * &x;
            for r in 0..9 {
                assert!((z[r] - pred[r]).abs() < 1e-9, "frame {k} row {r}: {} vs {}", z[r], pred[r]);
            }
        }
    }
}
