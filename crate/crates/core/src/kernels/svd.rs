//! Singular value decomposition: Householder bidiagonalization followed by
//! implicit-shift QR on the bidiagonal, with Givens rotations accumulated into
//! the singular-vector factors.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Thin SVD `A = U diag(sigma) Vᵀ` with `k = min(m, n)` columns.
#[derive(Debug, Clone)]
pub struct SvdFactors<T> {
    /// `m x k`, orthonormal columns.
    pub u: DenseMatrix<T>,
    /// Singular values, non-negative, descending.
    pub sigma: Vec<T>,
    /// `n x k`, orthonormal columns.
    pub v: DenseMatrix<T>,
}

/// Hypotenuse without overflow.
fn hypot<T: Scalar>(a: T, b: T) -> T {
    let (a, b) = (a.abs(), b.abs());
    let (big, small) = if a > b { (a, b) } else { (b, a) };
    if big == T::zero() {
        return T::zero();
    }
    let r = small / big;
    big * (T::one() + r * r).sqrt()
}

/// |a| carrying the sign of b (sign(0) = +).
fn sign_of<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Rotate columns `c1`, `c2` of `m` by the Givens pair `(c, s)`.
fn rotate_cols<T: Scalar>(m: &mut DenseMatrix<T>, c1: usize, c2: usize, c: T, s: T) {
    for r in 0..m.rows() {
        let y = m[(r, c1)];
        let z = m[(r, c2)];
        m[(r, c1)] = y * c + z * s;
        m[(r, c2)] = z * c - y * s;
    }
}

/// Compute the thin SVD. Fails with [`Error::NonConvergence`] if the QR
/// iteration exceeds `75 * min(m, n)` sweeps (never observed in practice) and
/// with [`Error::NonFinite`] on inputs containing NaN or infinity.
pub fn svd<T: Scalar>(a: &DenseMatrix<T>) -> Result<SvdFactors<T>> {
    if !a.all_finite() {
        return Err(Error::NonFinite("svd input".into()));
    }
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let f = svd_tall(&a.transpose())?;
        Ok(SvdFactors {
            u: f.v,
            sigma: f.sigma,
            v: f.u,
        })
    }
}

/// Minimum-norm least-squares solution of `A x = b` via the SVD: directions
/// whose singular value is at or below `eps * max(m, n) * sigma_1` count as
/// null and receive no component. For consistent systems with a nontrivial
/// nullspace this is the bounded particular solution orthogonal to the
/// nullspace; for inconsistent ones it minimizes `||A x - b||` first and
/// `||x||` second.
pub fn svd_min_norm_solve<T: Scalar>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "min-norm solve: rhs has {} entries for {} rows",
            b.len(),
            a.rows()
        )));
    }
    let f = svd(a)?;
    let sigma_max = f.sigma.first().copied().unwrap_or_else(T::zero);
    let cutoff = T::epsilon() * T::of_usize(a.rows().max(a.cols()).max(1)) * sigma_max;
    let mut x = vec![T::zero(); a.cols()];
    for (j, &s) in f.sigma.iter().enumerate() {
        if s <= cutoff {
            break; // singular values are sorted descending
        }
        let mut coeff = T::zero();
        for (i, &bi) in b.iter().enumerate() {
            coeff += f.u[(i, j)] * bi;
        }
        coeff /= s;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += coeff * f.v[(i, j)];
        }
    }
    Ok(x)
}

/// Bidiagonalization of a tall matrix: returns `(d, e, u, v)` with
/// `A = U B Vᵀ`, `B` upper bidiagonal (diagonal `d`, superdiagonal `e`).
fn bidiagonalize<T: Scalar>(
    a: &DenseMatrix<T>,
) -> (Vec<T>, Vec<T>, DenseMatrix<T>, DenseMatrix<T>) {
    let (m, n) = (a.rows(), a.cols());
    let mut work = a.clone();
    let mut beta_l = vec![T::zero(); n];
    let mut beta_r = vec![T::zero(); n.saturating_sub(2)];

    for j in 0..n {
        // Left reflector: zero column j below the diagonal.
        let x0 = work[(j, j)];
        let mut sigma = T::zero();
        for i in j + 1..m {
            sigma += work[(i, j)] * work[(i, j)];
        }
        let mu = (x0 * x0 + sigma).sqrt();
        if sigma == T::zero() {
            if x0 < T::zero() {
                beta_l[j] = T::of(2.0);
                for jj in j..n {
                    work[(j, jj)] = -work[(j, jj)];
                }
            }
            work[(j, j)] = mu;
        } else {
            let v0 = if x0 <= T::zero() {
                x0 - mu
            } else {
                -sigma / (x0 + mu)
            };
            let beta = T::of(2.0) * v0 * v0 / (sigma + v0 * v0);
            beta_l[j] = beta;
            for i in j + 1..m {
                work[(i, j)] = work[(i, j)] / v0;
            }
            work[(j, j)] = mu;
            for jj in j + 1..n {
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

        // Right reflector: zero row j beyond the superdiagonal.
        if j + 2 < n {
            let x0 = work[(j, j + 1)];
            let mut sigma = T::zero();
            for t in j + 2..n {
                sigma += work[(j, t)] * work[(j, t)];
            }
            let mu = (x0 * x0 + sigma).sqrt();
            if sigma == T::zero() {
                if x0 < T::zero() {
                    beta_r[j] = T::of(2.0);
                    for i in j..m {
                        work[(i, j + 1)] = -work[(i, j + 1)];
                    }
                }
                work[(j, j + 1)] = mu;
            } else {
                let v0 = if x0 <= T::zero() {
                    x0 - mu
                } else {
                    -sigma / (x0 + mu)
                };
                let beta = T::of(2.0) * v0 * v0 / (sigma + v0 * v0);
                beta_r[j] = beta;
                for t in j + 2..n {
                    work[(j, t)] = work[(j, t)] / v0;
                }
                work[(j, j + 1)] = mu;
                for i in j + 1..m {
                    let mut s = work[(i, j + 1)];
                    for t in j + 2..n {
                        s += work[(j, t)] * work[(i, t)];
                    }
                    let bs = beta * s;
                    work[(i, j + 1)] = work[(i, j + 1)] - bs;
                    for t in j + 2..n {
                        let vt = work[(j, t)];
                        work[(i, t)] = work[(i, t)] - bs * vt;
                    }
                }
            }
        }
    }

    let d: Vec<T> = (0..n).map(|j| work[(j, j)]).collect();
    let e: Vec<T> = (0..n.saturating_sub(1)).map(|j| work[(j, j + 1)]).collect();

    // Backward accumulation of U = H_0 .. H_{n-1} [I_n; 0].
    let mut u = DenseMatrix::zeros(m, n);
    for i in 0..n {
        u[(i, i)] = T::one();
    }
    for j in (0..n).rev() {
        let beta = beta_l[j];
        if beta == T::zero() {
            continue;
        }
        for jj in j..n {
            let mut s = u[(j, jj)];
            for i in j + 1..m {
                s += work[(i, j)] * u[(i, jj)];
            }
            let bs = beta * s;
            u[(j, jj)] = u[(j, jj)] - bs;
            for i in j + 1..m {
                let vij = work[(i, j)];
                u[(i, jj)] = u[(i, jj)] - bs * vij;
            }
        }
    }

    // Backward accumulation of V = G_0 .. G_{n-3} I, reflector j on rows j+1..n.
    let mut v = DenseMatrix::identity(n);
    for j in (0..n.saturating_sub(2)).rev() {
        let beta = beta_r[j];
        if beta == T::zero() {
            continue;
        }
        for jj in j + 1..n {
            let mut s = v[(j + 1, jj)];
            for t in j + 2..n {
                s += work[(j, t)] * v[(t, jj)];
            }
            let bs = beta * s;
            v[(j + 1, jj)] = v[(j + 1, jj)] - bs;
            for t in j + 2..n {
                let vt = work[(j, t)];
                v[(t, jj)] = v[(t, jj)] - bs * vt;
            }
        }
    }

    (d, e, u, v)
}

fn svd_tall<T: Scalar>(a: &DenseMatrix<T>) -> Result<SvdFactors<T>> {
    let n = a.cols();
    assert!(a.rows() >= n && n > 0, "svd_tall: shape");
    let (mut d, mut e, mut u, mut v) = bidiagonalize(a);

    let anorm = (0..n).fold(T::zero(), |acc, i| {
        let row = d[i].abs() + if i > 0 { e[i - 1].abs() } else { T::zero() };
        acc.max(row)
    });
    let negligible = |x: T| x.abs() <= T::epsilon() * anorm;
    let cap = 75 * n;
    let mut sweeps = 0usize;

    if anorm > T::zero() {
        for k in (0..n).rev() {
            loop {
                // Split scan: find the top of the active block.
                let mut l = k;
                let mut cancel = false;
                while l > 0 {
                    if negligible(e[l - 1]) {
                        e[l - 1] = T::zero();
                        break;
                    }
                    if negligible(d[l - 1]) {
                        cancel = true;
                        break;
                    }
                    l -= 1;
                }
                if cancel {
                    // d[l-1] is negligible: chase e[l-1] off the bidiagonal,
                    // rotating it through column l-1 of U.
                    let mut c = T::zero();
                    let mut s = T::one();
                    for ii in l..=k {
                        let f = s * e[ii - 1];
                        e[ii - 1] = c * e[ii - 1];
                        if negligible(f) {
                            break;
                        }
                        let g = d[ii];
                        let h = hypot(f, g);
                        d[ii] = h;
                        c = g / h;
                        s = -f / h;
                        rotate_cols(&mut u, l - 1, ii, c, s);
                    }
                }
                let z = d[k];
                if l == k {
                    if z < T::zero() {
                        d[k] = -z;
                        for r in 0..n {
                            v[(r, k)] = -v[(r, k)];
                        }
                    }
                    break;
                }
                sweeps += 1;
                if sweeps > cap {
                    return Err(Error::NonConvergence("svd qr iteration"));
                }

                // Shift from the trailing 2x2 of BᵀB.
                let x = d[l];
                let y = d[k - 1];
                let g0 = if k >= 2 { e[k - 2] } else { T::zero() };
                let h0 = e[k - 1];
                let mut f =
                    ((y - z) * (y + z) + (g0 - h0) * (g0 + h0)) / (T::of(2.0) * h0 * y);
                let g1 = hypot(f, T::one());
                f = ((x - z) * (x + z) + h0 * (y / (f + sign_of(g1, f)) - h0)) / x;

                // Bulge chase with paired right/left Givens rotations.
                let mut c = T::one();
                let mut s = T::one();
                let mut x = x;
                for j in l..k {
                    let i = j + 1;
                    let mut g = e[j];
                    let y = d[i];
                    let mut h = s * g;
                    g = c * g;
                    let mut zz = hypot(f, h);
                    if j > 0 {
                        e[j - 1] = zz;
                    }
                    c = f / zz;
                    s = h / zz;
                    f = x * c + g * s;
                    g = g * c - x * s;
                    h = y * s;
                    let y = y * c;
                    rotate_cols(&mut v, j, i, c, s);
                    zz = hypot(f, h);
                    d[j] = zz;
                    if zz != T::zero() {
                        c = f / zz;
                        s = h / zz;
                    }
                    f = c * g + s * y;
                    x = c * y - s * g;
                    rotate_cols(&mut u, j, i, c, s);
                }
                if l > 0 {
                    e[l - 1] = T::zero();
                }
                e[k - 1] = f;
                d[k] = x;
            }
        }
    } else {
        for x in d.iter_mut() {
            *x = T::zero();
        }
    }

    // Sort descending; stable on ties for determinism.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));
    let sigma: Vec<T> = order.iter().map(|&i| d[i]).collect();
    let up = DenseMatrix::from_fn(u.rows(), n, |r, j| u[(r, order[j])]);
    let vp = DenseMatrix::from_fn(n, n, |r, j| v[(r, order[j])]);

    Ok(SvdFactors {
        u: up,
        sigma,
        v: vp,
    })
}
