//! Small dense helpers shared by the models and the metrics.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};

/// Skew-symmetric matrix `[v]_x` such that `[v]_x w = v x w`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Eigen-decomposition with eigenvalues sorted ascending and the
/// eigenvectors permuted accordingly.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let mut values: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    DVector::from_vec(values)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_abs_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn trace(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Cholesky factorization; on failure retries once with `jitter * trace / n`
/// added to the diagonal.
pub fn cholesky_with_jitter(m: &DMatrix<f64>, jitter: f64) -> Result<Cholesky<f64, Dyn>> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok(chol);
    }
    let n = m.nrows().max(1);
    let eps = jitter * trace(m).abs() / n as f64;
    if eps > 0.0 {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += eps;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            return Ok(chol);
        }
    }
    Err(Error::Numerical(format!(
        "matrix of dimension {} is not positive definite",
        m.nrows()
    )))
}

pub fn logdet_from_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// Spectral norm of a symmetric matrix.
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    max_abs_eigenvalue(m)
}
