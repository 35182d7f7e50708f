//! Direct dense solutions used to cross-check the low-rank iterations and
//! to produce reference singular-value spectra.

use lrsylv::kernels::{real_schur, solve_sylvester_dense, svd};
use lrsylv::tucker::DenseTensor;
use lrsylv::{CoefficientOperator, DenseMatrix, Error, Result};

use crate::generators::{dirichlet_laplacian_eigenvalues, dirichlet_laplacian_eigenvectors};
use crate::spec::ORACLE_ENTRY_LIMIT;

/// Whether the dense matrix oracle may run at the given sizes.
pub fn matrix_oracle_allowed(m: usize, n: usize, cap: usize) -> bool {
    m <= cap && n <= cap && m.saturating_mul(n) <= ORACLE_ENTRY_LIMIT
}

/// Whether the tensor oracle may materialize the given shape.
pub fn tensor_oracle_allowed(dims: &[usize], cap: usize) -> bool {
    let mut total = 1usize;
    for &d in dims {
        if d > cap {
            return false;
        }
        total = total.saturating_mul(d);
    }
    total <= ORACLE_ENTRY_LIMIT
}

/// Dense direct solution of `A X + X Bᵀ = C`.
pub fn matrix_direct_solution(
    op_a: &CoefficientOperator<f64>,
    op_b: &CoefficientOperator<f64>,
    c: &DenseMatrix<f64>,
) -> Result<DenseMatrix<f64>> {
    solve_sylvester_dense(&op_a.to_dense(), &op_b.to_dense(), c)
}

/// Eigendecomposition of a symmetric operator via its Schur form (the
/// quasi-triangular factor of a symmetric matrix is diagonal).
fn symmetric_eigen(dense: &DenseMatrix<f64>) -> Result<(DenseMatrix<f64>, Vec<f64>)> {
    let sf = real_schur(dense)?;
    let lam: Vec<f64> = (0..dense.rows()).map(|i| sf.t.row(i)[i]).collect();
    Ok((sf.q, lam))
}

/// Minimal-norm solution of `A X + X Bᵀ = C` for symmetric `A`, `B` whose
/// spectra may produce exact zero sums (the periodic pair): components on
/// null directions are dropped.
pub fn symmetric_pair_pinv_solution(
    op_a: &CoefficientOperator<f64>,
    op_b: &CoefficientOperator<f64>,
    c: &DenseMatrix<f64>,
) -> Result<DenseMatrix<f64>> {
    let (qa, la) = symmetric_eigen(&op_a.to_dense())?;
    let (qb, lb) = symmetric_eigen(&op_b.to_dense())?;
    let scale = la.iter().chain(lb.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut hat = qa.t_mul(&c.matmul(&qb));
    for i in 0..hat.rows() {
        for j in 0..hat.cols() {
            let denom = la[i] + lb[j];
            let row = hat.row_mut(i);
            if denom.abs() <= cutoff {
                row[j] = 0.0;
            } else {
                row[j] /= denom;
            }
        }
    }
    Ok(qa.matmul(&hat.mul_t(&qb)))
}

/// Direct tensor solution through a per-mode eigenbasis: transforms the
/// right-hand side, divides by the eigenvalue sums (skipping sums below
/// `cutoff` for singular pairs), and transforms back.
fn eigen_solution_tensor(
    basis: &DenseMatrix<f64>,
    lam: &[f64],
    b: &DenseTensor<f64>,
    cutoff: f64,
) -> Result<DenseTensor<f64>> {
    let n = lam.len();
    let d = b.ndim();
    let mut hat = b.clone();
    for k in 0..d {
        hat = hat.mode_product(&basis.transpose(), k)?;
    }
    for (lin, val) in hat.data_mut().iter_mut().enumerate() {
        let mut rem = lin;
        let mut sum = 0.0;
        for _ in 0..d {
            sum += lam[rem % n];
            rem /= n;
        }
        if sum.abs() <= cutoff {
            *val = 0.0;
        } else {
            *val /= sum;
        }
    }
    for k in 0..d {
        hat = hat.mode_product(basis, k)?;
    }
    Ok(hat)
}

/// Direct solution of the d-dimensional Dirichlet problem through the
/// closed-form eigenbasis of `tridiag(1,−2,1)/Δx²`.
pub fn dirichlet_direct_tensor(n: usize, b: &DenseTensor<f64>) -> Result<DenseTensor<f64>> {
    if b.shape().iter().any(|&s| s != n) {
        return Err(Error::DimensionMismatch(format!(
            "expected a cubic shape of side {n}, got {:?}",
            b.shape()
        )));
    }
    let basis = dirichlet_laplacian_eigenvectors(n);
    let lam = dirichlet_laplacian_eigenvalues(n);
    // All eigenvalue sums are strictly negative: nothing to skip.
    eigen_solution_tensor(&basis, &lam, b, 0.0)
}

/// Minimal-norm direct solution of the d-dimensional periodic problem;
/// components on the operator's nullspace are dropped.
pub fn periodic_direct_tensor(
    op: &CoefficientOperator<f64>,
    b: &DenseTensor<f64>,
) -> Result<DenseTensor<f64>> {
    let n = op.dim();
    if b.shape().iter().any(|&s| s != n) {
        return Err(Error::DimensionMismatch(format!(
            "expected a cubic shape of side {n}, got {:?}",
            b.shape()
        )));
    }
    let (basis, lam) = symmetric_eigen(&op.to_dense())?;
    let scale = lam.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    eigen_solution_tensor(&basis, &lam, b, 1e-10 * scale.max(f64::MIN_POSITIVE))
}

/// Singular values of a dense matrix, descending.
pub fn dense_singular_values(x: &DenseMatrix<f64>) -> Result<Vec<f64>> {
    Ok(svd(x)?.sigma)
}

/// Per-mode singular values of a dense tensor's matricizations.
pub fn mode_singular_values(x: &DenseTensor<f64>) -> Result<Vec<Vec<f64>>> {
    (0..x.ndim()).map(|k| Ok(svd(&x.matricize(k))?.sigma)).collect()
}
