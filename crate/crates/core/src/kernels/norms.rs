//! Norms used for convergence monitoring: the dimension-scaled Frobenius norm
//! and an exact factored evaluation of the equation residual that never forms
//! a large dense matrix.

use crate::bug::LowRankMatrix;
use crate::dense::DenseMatrix;
use crate::kernels::qr::qr_thin;
use crate::operators::CoefficientOperator;
use crate::scalar::Scalar;

/// Frobenius norm divided by the square root of the entry count: for an
/// order-`d` cube with edge `n` this is `||X||_F / n^(d/2)`, and the
/// rectangular generalization divides by `sqrt(rows * cols)`.
pub fn scaled_fro_norm<T: Scalar>(x: &DenseMatrix<T>) -> T {
    x.fro_norm() / T::of_usize(x.rows() * x.cols()).sqrt()
}

/// Scaling denominator for an entry count (shared with the tensor variant).
pub fn entry_count_scale<T: Scalar>(entries: usize) -> T {
    T::of_usize(entries).sqrt()
}

/// Frobenius norm of `A X + X Bᵀ - C` for factored `X` and `C`, computed
/// exactly in factored form:
///
/// the residual equals `L G Rᵀ` with `L = [A U_x, U_x, U_c]`,
/// `R = [V_x, B V_x, V_c]` and block-diagonal core `G = diag(S_x, S_x, -S_c)`;
/// thin QR of both stacks reduces the norm to that of a small matrix.
pub fn low_rank_residual_norm<T: Scalar>(
    op_a: &CoefficientOperator<T>,
    op_b: &CoefficientOperator<T>,
    x: &LowRankMatrix<T>,
    c: &LowRankMatrix<T>,
) -> T {
    let left = DenseMatrix::hstack(&[&op_a.apply(&x.u), &x.u, &c.u]);
    let right = DenseMatrix::hstack(&[&x.v, &op_b.apply(&x.v), &c.v]);
    let core = DenseMatrix::block_diag(&[&x.s, &x.s, &c.s.scale(-T::one())]);
    let rl = qr_thin(&left).r;
    let rr = qr_thin(&right).r;
    rl.matmul(&core).mul_t(&rr).fro_norm()
}
