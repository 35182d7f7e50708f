//! Mixed-size Sylvester solves `A K + K Mᵀ = F` where `A` is a large
//! coefficient operator (any representation) and `M` is a small dense matrix:
//! the workhorse of the basis-update steps, where `M` is a projected
//! coefficient of the co-rank.
//!
//! Strategy: Schur-factor `Mᵀ = Z T Zᵀ`, rotate the unknown (`K̃ = K Z`) so
//! the small side becomes quasi-triangular, then sweep `T`'s diagonal blocks
//! left to right — each 1x1 block is one shifted solve of `A`, each 2x2 block
//! one block-shifted solve of two coupled columns. Shifted-solve
//! factorizations are cached on the operator, so repeated calls with the same
//! `M` cost only substitutions.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kernels::schur::real_schur;
use crate::operators::shifted::Shift;
use crate::operators::CoefficientOperator;
use crate::scalar::Scalar;

pub fn solve_sylvester_large_small<T: Scalar>(
    op_a: &CoefficientOperator<T>,
    m_small: &DenseMatrix<T>,
    f: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if !m_small.is_square() {
        return Err(Error::DimensionMismatch(
            "small coefficient must be square".into(),
        ));
    }
    let (n, r) = (op_a.dim(), m_small.rows());
    if f.rows() != n || f.cols() != r {
        return Err(Error::DimensionMismatch(format!(
            "mixed solve: rhs {}x{}, expected {}x{}",
            f.rows(),
            f.cols(),
            n,
            r
        )));
    }
    let sm = real_schur(&m_small.transpose())?;
    let (z, t) = (&sm.q, &sm.t);
    let ft = f.matmul(z);
    let mut kt = DenseMatrix::zeros(n, r);

    // A K̃ + K̃ T = F̃ with T quasi-upper: column blocks couple leftward, so
    // sweep blocks in ascending order.
    let mut q0 = 0;
    for &b in &sm.block_sizes {
        // Subtract coupling to already-solved columns.
        let mut rhs = DenseMatrix::zeros(n, b);
        for jj in 0..b {
            for i in 0..n {
                let mut s = ft[(i, q0 + jj)];
                for k in 0..q0 {
                    s -= t[(k, q0 + jj)] * kt[(i, k)];
                }
                rhs[(i, jj)] = s;
            }
        }
        // Within-block system is a shifted solve with S = (T block)ᵀ.
        let shift = if b == 1 {
            Shift::Scalar(t[(q0, q0)])
        } else {
            Shift::Block {
                s11: t[(q0, q0)],
                s12: t[(q0 + 1, q0)],
                s21: t[(q0, q0 + 1)],
                s22: t[(q0 + 1, q0 + 1)],
            }
        };
        let sol = op_a.solve_shifted(&shift, &rhs)?;
        for jj in 0..b {
            for i in 0..n {
                kt[(i, q0 + jj)] = sol[(i, jj)];
            }
        }
        q0 += b;
    }
    Ok(kt.mul_t(z))
}
