//! Householder QR with explicit thin-Q accumulation.
//!
//! The reflector convention keeps the diagonal of `R` non-negative, which
//! makes factorizations reproducible across runs. Because `Q` is assembled as
//! a product of exact reflectors, its columns stay orthonormal to machine
//! precision even when the input columns are dependent — the columns hit by a
//! degenerate reflector come out as deterministic orthonormal completions of
//! the span, which is exactly what the basis-augmentation step needs.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct QrFactors<T> {
    /// `m x k` with orthonormal columns, `k = min(m, cols)`.
    pub q: DenseMatrix<T>,
    /// `k x cols` upper-trapezoidal with non-negative diagonal.
    pub r: DenseMatrix<T>,
}

/// Reflectors stored LAPACK-style: `v_j` below the diagonal of `work` with an
/// implicit leading 1, scaled so `H_j = I - beta_j v_j v_jᵀ`.
struct Reflectors<T> {
    work: DenseMatrix<T>,
    betas: Vec<T>,
}

fn householder_reduce<T: Scalar>(a: &DenseMatrix<T>, steps: usize) -> Reflectors<T> {
    let (m, c) = (a.rows(), a.cols());
    let mut work = a.clone();
    let mut betas = vec![T::zero(); steps];
    for j in 0..steps {
        // Build the reflector sending work[j.., j] to mu * e1 with mu >= 0.
        let x0 = work[(j, j)];
        let mut sigma = T::zero();
        for i in j + 1..m {
            sigma += work[(i, j)] * work[(i, j)];
        }
        let mu = (x0 * x0 + sigma).sqrt();
        if sigma == T::zero() {
            if x0 < T::zero() {
                // v = e1: reflection flips the sign of row j.
                betas[j] = T::of(2.0);
                for jj in j..c {
                    work[(j, jj)] = -work[(j, jj)];
                }
            }
            work[(j, j)] = mu;
            continue;
        }
        // v0 = x0 - mu computed without cancellation; store v/v0 below diag.
        let v0 = if x0 <= T::zero() {
            x0 - mu
        } else {
            -sigma / (x0 + mu)
        };
        let beta = T::of(2.0) * v0 * v0 / (sigma + v0 * v0);
        betas[j] = beta;
        for i in j + 1..m {
            work[(i, j)] = work[(i, j)] / v0;
        }
        work[(j, j)] = mu;
        // Apply H_j to the remaining columns.
        for jj in j + 1..c {
            let mut s = work[(j, jj)];
            for i in j + 1..m {
                s += work[(i, j)] * work[(i, jj)];
            }
            let bs = beta * s;
            work[(j, jj)] = work[(j, jj)] - bs;
            for i in j + 1..m {
                let vij = work[(i, j)];
                work[(i, jj)] = work[(i, jj)] - bs * vij;
            }
        }
    }
    Reflectors { work, betas }
}

/// Assemble `Q = H_0 .. H_{steps-1} [I_width; 0]` (backward accumulation).
fn accumulate_q<T: Scalar>(refl: &Reflectors<T>, width: usize) -> DenseMatrix<T> {
    let m = refl.work.rows();
    let steps = refl.betas.len();
    let mut q = DenseMatrix::zeros(m, width);
    for i in 0..width {
        q[(i, i)] = T::one();
    }
    for j in (0..steps).rev() {
        let beta = refl.betas[j];
        if beta == T::zero() {
            continue;
        }
        for jj in j..width {
            let mut s = q[(j, jj)];
            for i in j + 1..m {
                s += refl.work[(i, j)] * q[(i, jj)];
            }
            let bs = beta * s;
            q[(j, jj)] = q[(j, jj)] - bs;
            for i in j + 1..m {
                let vij = refl.work[(i, j)];
                q[(i, jj)] = q[(i, jj)] - bs * vij;
            }
        }
    }
    q
}

/// Thin QR of any `m x c` matrix: `Q` is `m x min(m, c)` orthonormal, `R` is
/// `min(m, c) x c` upper-trapezoidal, and `Q R` reconstructs the input.
pub fn qr_thin<T: Scalar>(a: &DenseMatrix<T>) -> QrFactors<T> {
    let (m, c) = (a.rows(), a.cols());
    assert!(m > 0 && c > 0, "qr_thin: empty matrix");
    let k = m.min(c);
    let refl = householder_reduce(a, k);
    let q = accumulate_q(&refl, k);
    let r = DenseMatrix::from_fn(k, c, |i, j| if j >= i { refl.work[(i, j)] } else { T::zero() });
    QrFactors { q, r }
}

/// Orthonormal basis for the column span of a tall matrix (`rows >= cols`);
/// the output always has the full `cols` columns.
pub fn orth<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.rows() < a.cols() {
        return Err(Error::InvalidArgument(format!(
            "orth needs rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(qr_thin(a).q)
}

/// First `width` orthonormal directions of the column span, prioritizing the
/// leading columns. Requires `width <= min(rows, cols)`. Used when a basis
/// augmentation would otherwise exceed the ambient dimension.
pub(crate) fn orth_limited<T: Scalar>(a: &DenseMatrix<T>, width: usize) -> DenseMatrix<T> {
    assert!(
        width <= a.rows() && width <= a.cols() && width > 0,
        "orth_limited: width {} for {}x{}",
        width,
        a.rows(),
        a.cols()
    );
    let refl = householder_reduce(a, width);
    accumulate_q(&refl, width)
}
