//! The three building-block solves of the alternating iteration. Each takes
//! the right-hand side in factored form and never materializes a large dense
//! matrix beyond `dim x rank`.

use crate::bug::LowRankMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kernels::sylvester::{solve_sylvester_dense, solve_sylvester_dense_min_norm};
use crate::operators::{solve_sylvester_large_small, CoefficientOperator};
use crate::scalar::Scalar;

/// Row-space update: solve `A K + K (VᵀBᵀV) = C V` for `K` (`m x r`), with
/// the column basis `V` held fixed.
pub fn k_step<T: Scalar>(
    op_a: &CoefficientOperator<T>,
    op_b: &CoefficientOperator<T>,
    c: &LowRankMatrix<T>,
    v: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let bv = op_b.apply(v);
    // Passing M = VᵀBV solves A K + K Mᵀ with Mᵀ = VᵀBᵀV.
    let m = v.t_mul(&bv);
    let rhs = c.u.matmul(&c.s).matmul(&c.v.t_mul(v));
    solve_sylvester_large_small(op_a, &m, &rhs)
}

/// Column-space update: solve `B L + L (UᵀAᵀU) = Cᵀ U` for `L` (`n x r`),
/// with the row basis `U` held fixed.
pub fn l_step<T: Scalar>(
    op_a: &CoefficientOperator<T>,
    op_b: &CoefficientOperator<T>,
    c: &LowRankMatrix<T>,
    u: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let au = op_a.apply(u);
    let m = u.t_mul(&au);
    let rhs = c.v.matmul(&c.s.t_mul(&c.u.t_mul(u)));
    solve_sylvester_large_small(op_b, &m, &rhs)
}

/// Galerkin core solve on fixed orthonormal bases: solve
/// `(ÛᵀAÛ) S + S (V̂ᵀBV̂)ᵀ = Ûᵀ C V̂` for the small core `S`.
///
/// A singular projected pencil does not abort the solve: for singular but
/// compatible problems (a shared operator nullspace with a right-hand side
/// orthogonal to it) the pencil becomes singular exactly when the bases
/// capture the nullspace, so the core system is re-solved by minimum-norm
/// least squares instead. Remaining failures surface as
/// [`Error::SingularProjectedPencil`] so drivers can retry with fresh bases.
pub fn s_step<T: Scalar>(
    op_a: &CoefficientOperator<T>,
    op_b: &CoefficientOperator<T>,
    c: &LowRankMatrix<T>,
    u_hat: &DenseMatrix<T>,
    v_hat: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let a_proj = u_hat.t_mul(&op_a.apply(u_hat));
    let b_proj = v_hat.t_mul(&op_b.apply(v_hat));
    let rhs = u_hat
        .t_mul(&c.u)
        .matmul(&c.s)
        .matmul(&c.v.t_mul(v_hat));
    match solve_sylvester_dense(&a_proj, &b_proj, &rhs) {
        Err(Error::Singular(_)) => solve_sylvester_dense_min_norm(&a_proj, &b_proj, &rhs)
            .map_err(|e| match e {
                Error::Singular(_) => Error::SingularProjectedPencil,
                other => other,
            }),
        other => other,
    }
}

/// Smallest retained rank whose discarded singular-value tail satisfies
/// `sqrt(sum_{j > r} sigma_j^2) <= theta`, floored at 1 so an iterate never
/// collapses to rank zero.
pub fn truncate_rank<T: Scalar>(sigma: &[T], theta: T) -> usize {
    let n = sigma.len();
    // Suffix sums of squares, accumulated from the tail for accuracy.
    let mut tail = T::zero();
    let mut rank = n;
    for k in (0..n).rev() {
        let with_k = tail + sigma[k] * sigma[k];
        if with_k.sqrt() <= theta {
            tail = with_k;
            rank = k;
        } else {
            break;
        }
    }
    rank.max(1)
}
