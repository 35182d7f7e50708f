//! Real Schur decomposition `A = Q T Qᵀ`: Hessenberg reduction followed by
//! Francis double-shift QR with deflation, then a standardization pass that
//! splits 2x2 diagonal blocks with real eigenvalues and zeroes everything
//! outside the declared block structure exactly.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct SchurFactors<T> {
    /// Orthogonal similarity factor.
    pub q: DenseMatrix<T>,
    /// Quasi-upper-triangular factor: exactly zero below the first
    /// subdiagonal, and on the subdiagonal outside declared 2x2 blocks.
    pub t: DenseMatrix<T>,
    /// Diagonal block sizes (1 or 2) from top-left to bottom-right; 2x2
    /// blocks always carry complex-conjugate eigenvalue pairs.
    pub block_sizes: Vec<usize>,
}

impl<T: Scalar> SchurFactors<T> {
    /// Eigenvalues as `(re, im)` pairs in diagonal order.
    pub fn eigenvalues(&self) -> Vec<(T, T)> {
        let mut out = Vec::new();
        let mut i = 0;
        for &b in &self.block_sizes {
            if b == 1 {
                out.push((self.t[(i, i)], T::zero()));
            } else {
                let (a, bb) = (self.t[(i, i)], self.t[(i, i + 1)]);
                let (c, d) = (self.t[(i + 1, i)], self.t[(i + 1, i + 1)]);
                let re = (a + d) / T::of(2.0);
                let p = (a - d) / T::of(2.0);
                let im = (-(p * p + bb * c)).max(T::zero()).sqrt();
                out.push((re, im));
                out.push((re, -im));
            }
            i += b;
        }
        out
    }

    /// Offsets of the diagonal blocks (start row of each block).
    pub fn block_starts(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.block_sizes.len());
        let mut at = 0;
        for &b in &self.block_sizes {
            out.push(at);
            at += b;
        }
        out
    }
}

/// Hessenberg reduction with accumulated orthogonal factor.
fn hessenberg<T: Scalar>(a: &DenseMatrix<T>) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let n = a.rows();
    let mut t = a.clone();
    let mut vs: Vec<Vec<T>> = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    for j in 0..n.saturating_sub(2) {
        let x0 = t[(j + 1, j)];
        let mut sigma = T::zero();
        for i in j + 2..n {
            sigma += t[(i, j)] * t[(i, j)];
        }
        if sigma == T::zero() {
            // Column already in Hessenberg form (any sign of x0 is fine here).
            vs.push(Vec::new());
            betas.push(T::zero());
            continue;
        }
        let mu = (x0 * x0 + sigma).sqrt();
        let v0 = if x0 <= T::zero() {
            x0 - mu
        } else {
            -sigma / (x0 + mu)
        };
        let beta = T::of(2.0) * v0 * v0 / (sigma + v0 * v0);
        // v normalized to v[j+1] = 1; store tail.
        let v: Vec<T> = (j + 2..n).map(|i| t[(i, j)] / v0).collect();
        // Left: rows j+1..n over the columns right of j; column j is set
        // directly below (the reflector sends it to mu * e1 by construction).
        for col in j + 1..n {
            let mut s = t[(j + 1, col)];
            for (off, &vi) in v.iter().enumerate() {
                s += vi * t[(j + 2 + off, col)];
            }
            let bs = beta * s;
            t[(j + 1, col)] = t[(j + 1, col)] - bs;
            for (off, &vi) in v.iter().enumerate() {
                t[(j + 2 + off, col)] = t[(j + 2 + off, col)] - bs * vi;
            }
        }
        // Right: columns j+1..n over all rows.
        for row in 0..n {
            let mut s = t[(row, j + 1)];
            for (off, &vi) in v.iter().enumerate() {
                s += vi * t[(row, j + 2 + off)];
            }
            let bs = beta * s;
            t[(row, j + 1)] = t[(row, j + 1)] - bs;
            for (off, &vi) in v.iter().enumerate() {
                t[(row, j + 2 + off)] = t[(row, j + 2 + off)] - bs * vi;
            }
        }
        // Exact value for the new subdiagonal entry, exact zeros below it.
        t[(j + 1, j)] = mu;
        for i in j + 2..n {
            t[(i, j)] = T::zero();
        }
        vs.push(v);
        betas.push(beta);
    }
    // Q = H_0 .. H_{n-3} by backward accumulation.
    let mut q = DenseMatrix::identity(n);
    for j in (0..vs.len()).rev() {
        let beta = betas[j];
        if beta == T::zero() {
            continue;
        }
        let v = &vs[j];
        for col in j + 1..n {
            let mut s = q[(j + 1, col)];
            for (off, &vi) in v.iter().enumerate() {
                s += vi * q[(j + 2 + off, col)];
            }
            let bs = beta * s;
            q[(j + 1, col)] = q[(j + 1, col)] - bs;
            for (off, &vi) in v.iter().enumerate() {
                q[(j + 2 + off, col)] = q[(j + 2 + off, col)] - bs * vi;
            }
        }
    }
    (q, t)
}

/// One Francis double-shift sweep on the window `lo..=hi` of `t`, with the
/// similarity accumulated into `q`.
fn francis_sweep<T: Scalar>(
    t: &mut DenseMatrix<T>,
    q: &mut DenseMatrix<T>,
    lo: usize,
    hi: usize,
    exceptional: bool,
) {
    let n = t.rows();
    // Trailing 2x2 (or exceptional surrogate) supplies trace and determinant.
    let (tr, det) = if exceptional {
        let s = t[(hi, hi - 1)].abs()
            + if hi >= lo + 2 {
                t[(hi - 1, hi - 2)].abs()
            } else {
                T::zero()
            };
        let h11 = T::of(0.75) * s + t[(hi, hi)];
        let h12 = T::of(-0.4375) * s;
        let h21 = s;
        let h22 = h11;
        (h11 + h22, h11 * h22 - h12 * h21)
    } else {
        let (a, b) = (t[(hi - 1, hi - 1)], t[(hi - 1, hi)]);
        let (c, d) = (t[(hi, hi - 1)], t[(hi, hi)]);
        (a + d, a * d - b * c)
    };

    // First column of (T - s1)(T - s2) e1 has three nonzeros.
    let mut x = t[(lo, lo)] * t[(lo, lo)] + t[(lo, lo + 1)] * t[(lo + 1, lo)]
        - tr * t[(lo, lo)]
        + det;
    let mut y = t[(lo + 1, lo)] * (t[(lo, lo)] + t[(lo + 1, lo + 1)] - tr);
    let mut z = if lo + 2 <= hi {
        t[(lo + 1, lo)] * t[(lo + 2, lo + 1)]
    } else {
        T::zero()
    };

    for i in lo..hi - 1 {
        // Householder on (x, y, z) acting on rows/cols i, i+1, i+2.
        let (v, beta) = house3(x, y, z);
        let first_col = if i > lo { i - 1 } else { lo };
        if beta != T::zero() {
            for col in first_col..n {
                let s = v[0] * t[(i, col)] + v[1] * t[(i + 1, col)] + v[2] * t[(i + 2, col)];
                let bs = beta * s;
                t[(i, col)] = t[(i, col)] - bs * v[0];
                t[(i + 1, col)] = t[(i + 1, col)] - bs * v[1];
                t[(i + 2, col)] = t[(i + 2, col)] - bs * v[2];
            }
            let last_row = (i + 3).min(hi);
            for row in 0..=last_row {
                let s = v[0] * t[(row, i)] + v[1] * t[(row, i + 1)] + v[2] * t[(row, i + 2)];
                let bs = beta * s;
                t[(row, i)] = t[(row, i)] - bs * v[0];
                t[(row, i + 1)] = t[(row, i + 1)] - bs * v[1];
                t[(row, i + 2)] = t[(row, i + 2)] - bs * v[2];
            }
            for row in 0..n {
                let s = v[0] * q[(row, i)] + v[1] * q[(row, i + 1)] + v[2] * q[(row, i + 2)];
                let bs = beta * s;
                q[(row, i)] = q[(row, i)] - bs * v[0];
                q[(row, i + 1)] = q[(row, i + 1)] - bs * v[1];
                q[(row, i + 2)] = q[(row, i + 2)] - bs * v[2];
            }
        }
        x = t[(i + 1, i)];
        y = t[(i + 2, i)];
        z = if i + 3 <= hi { t[(i + 3, i)] } else { T::zero() };
    }

    // Final 2-element reflector on rows hi-1, hi.
    let (v, beta) = house2(x, y);
    if beta != T::zero() {
        let i = hi - 1;
        let first_col = if i > lo { i - 1 } else { lo };
        for col in first_col..n {
            let s = v[0] * t[(i, col)] + v[1] * t[(i + 1, col)];
            let bs = beta * s;
            t[(i, col)] = t[(i, col)] - bs * v[0];
            t[(i + 1, col)] = t[(i + 1, col)] - bs * v[1];
        }
        for row in 0..=hi {
            let s = v[0] * t[(row, i)] + v[1] * t[(row, i + 1)];
            let bs = beta * s;
            t[(row, i)] = t[(row, i)] - bs * v[0];
            t[(row, i + 1)] = t[(row, i + 1)] - bs * v[1];
        }
        for row in 0..n {
            let s = v[0] * q[(row, i)] + v[1] * q[(row, i + 1)];
            let bs = beta * s;
            q[(row, i)] = q[(row, i)] - bs * v[0];
            q[(row, i + 1)] = q[(row, i + 1)] - bs * v[1];
        }
    }
}

/// Householder reflector annihilating the tail of a 3-vector; returns
/// normalized `v` (unit leading entry and scaled tail folded into `beta`).
fn house3<T: Scalar>(x: T, y: T, z: T) -> ([T; 3], T) {
    let norm = (x * x + y * y + z * z).sqrt();
    if norm == T::zero() {
        return ([T::zero(); 3], T::zero());
    }
    let alpha = if x >= T::zero() { -norm } else { norm };
    let v0 = x - alpha;
    let vtv = v0 * v0 + y * y + z * z;
    if vtv == T::zero() {
        return ([T::zero(); 3], T::zero());
    }
    ([v0, y, z], T::of(2.0) / vtv)
}

fn house2<T: Scalar>(x: T, y: T) -> ([T; 2], T) {
    let norm = (x * x + y * y).sqrt();
    if norm == T::zero() {
        return ([T::zero(); 2], T::zero());
    }
    let alpha = if x >= T::zero() { -norm } else { norm };
    let v0 = x - alpha;
    let vtv = v0 * v0 + y * y;
    if vtv == T::zero() {
        return ([T::zero(); 2], T::zero());
    }
    ([v0, y], T::of(2.0) / vtv)
}

/// Compute the real Schur form. The iteration cap is `40 * n` Francis sweeps;
/// exceptional shifts are injected every tenth sweep on a stuck window.
pub fn real_schur<T: Scalar>(a: &DenseMatrix<T>) -> Result<SchurFactors<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "schur needs square input, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.all_finite() {
        return Err(Error::NonFinite("schur input".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Err(Error::InvalidArgument("schur of empty matrix".into()));
    }
    let anorm = a.max_abs();
    let eps = T::epsilon();

    let (mut q, mut t) = hessenberg(a);

    let cap = 40 * n;
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut window_iters = 0usize;
    while hi > 0 {
        // Find the top of the irreducible window ending at `hi`.
        let mut lo = 0;
        for i in (1..=hi).rev() {
            let scale = t[(i - 1, i - 1)].abs() + t[(i, i)].abs();
            let thresh = if scale > T::zero() {
                eps * scale
            } else {
                eps * anorm
            };
            if t[(i, i - 1)].abs() <= thresh {
                t[(i, i - 1)] = T::zero();
                lo = i;
                break;
            }
        }
        if lo == hi {
            hi -= 1;
            window_iters = 0;
            continue;
        }
        if lo + 1 == hi {
            // Converged 2x2 block (standardized later).
            if hi < 2 {
                break;
            }
            hi -= 2;
            window_iters = 0;
            continue;
        }
        total += 1;
        if total > cap {
            return Err(Error::NonConvergence("schur qr iteration"));
        }
        window_iters += 1;
        let exceptional = window_iters % 10 == 0;
        francis_sweep(&mut t, &mut q, lo, hi, exceptional);
    }

    // Standardize: split 2x2 blocks whose eigenvalues are real.
    let mut block_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 >= n || t[(i + 1, i)] == T::zero() {
            block_sizes.push(1);
            i += 1;
            continue;
        }
        let (a11, a12) = (t[(i, i)], t[(i, i + 1)]);
        let (a21, a22) = (t[(i + 1, i)], t[(i + 1, i + 1)]);
        let p = (a11 - a22) / T::of(2.0);
        let disc = p * p + a12 * a21;
        if disc < T::zero() {
            block_sizes.push(2);
            i += 2;
            continue;
        }
        // Real pair: rotate so the block becomes upper triangular.
        let sq = disc.sqrt();
        let lambda = (a11 + a22) / T::of(2.0) + if p >= T::zero() { sq } else { -sq };
        let (va, vb) = (a12, lambda - a11);
        let (wa, wb) = (lambda - a22, a21);
        let (e1, e2) = if va * va + vb * vb >= wa * wa + wb * wb {
            (va, vb)
        } else {
            (wa, wb)
        };
        let nrm = (e1 * e1 + e2 * e2).sqrt();
        let (cs, sn) = (e1 / nrm, e2 / nrm);
        for col in 0..n {
            let r1 = t[(i, col)];
            let r2 = t[(i + 1, col)];
            t[(i, col)] = cs * r1 + sn * r2;
            t[(i + 1, col)] = -sn * r1 + cs * r2;
        }
        for row in 0..n {
            let c1 = t[(row, i)];
            let c2 = t[(row, i + 1)];
            t[(row, i)] = cs * c1 + sn * c2;
            t[(row, i + 1)] = -sn * c1 + cs * c2;
        }
        for row in 0..n {
            let c1 = q[(row, i)];
            let c2 = q[(row, i + 1)];
            q[(row, i)] = cs * c1 + sn * c2;
            q[(row, i + 1)] = -sn * c1 + cs * c2;
        }
        block_sizes.push(1);
        block_sizes.push(1);
        i += 2;
    }

    // Exact zeros everywhere outside the declared structure.
    let starts = {
        let mut s = Vec::new();
        let mut at = 0;
        for &b in &block_sizes {
            s.push((at, b));
            at += b;
        }
        s
    };
    for col in 0..n {
        for row in col + 1..n {
            let inside = starts
                .iter()
                .any(|&(s, b)| b == 2 && row == s + 1 && col == s);
            if !inside {
                t[(row, col)] = T::zero();
            }
        }
    }

    Ok(SchurFactors { q, t, block_sizes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn check_schur(a: &DenseMatrix<f64>, f: &SchurFactors<f64>, tol: f64) {
        let n = a.rows();
        let qtq = f.q.t_mul(&f.q);
        assert!(
            qtq.max_abs_diff(&DenseMatrix::identity(n)) < tol,
            "Q orthogonality"
        );
        let recon = f.q.matmul(&f.t).mul_t(&f.q);
        let scale = a.max_abs().max(1.0);
        assert!(
            recon.max_abs_diff(a) < tol * scale,
            "reconstruction {} vs {}",
            recon.max_abs_diff(a),
            tol * scale
        );
        // Structure: exact zeros outside blocks.
        let starts = f.block_starts();
        for col in 0..n {
            for row in col + 1..n {
                let inside = starts
                    .iter()
                    .zip(&f.block_sizes)
                    .any(|(&s, &b)| b == 2 && row == s + 1 && col == s);
                if !inside {
                    assert_eq!(f.t[(row, col)], 0.0, "nonzero at ({row},{col})");
                }
            }
        }
        assert_eq!(f.block_sizes.iter().sum::<usize>(), n);
    }

    #[test]
    fn small_fixed_cases() {
        // 1x1.
        let a = DenseMatrix::from_rows(1, 1, &[3.5]);
        let f = real_schur(&a).unwrap();
        assert_eq!(f.t[(0, 0)], 3.5);
        assert_eq!(f.block_sizes, vec![1]);

        // 2x2 with real eigenvalues 3 and -1.
        let a = DenseMatrix::from_rows(2, 2, &[1.0, 4.0, 1.0, 1.0]);
        let f = real_schur(&a).unwrap();
        check_schur(&a, &f, 1e-13);
        assert_eq!(f.block_sizes, vec![1, 1]);
        let mut eig: Vec<f64> = f.eigenvalues().iter().map(|e| e.0).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((eig[0] + 1.0).abs() < 1e-13);
        assert!((eig[1] - 3.0).abs() < 1e-13);

        // Rotation: eigenvalues +-i.
        let a = DenseMatrix::from_rows(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let f = real_schur(&a).unwrap();
        check_schur(&a, &f, 1e-13);
        assert_eq!(f.block_sizes, vec![2]);
        let eig = f.eigenvalues();
        assert!((eig[0].0).abs() < 1e-13);
        assert!((eig[0].1.abs() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn random_matrices_reconstruct() {
        let mut rng = SeededRng::new(21);
        for n in [3, 5, 8, 13, 21, 34] {
            let a: DenseMatrix<f64> = rng.normal_matrix(n, n);
            let f = real_schur(&a).unwrap();
            check_schur(&a, &f, 1e-12);
            // Trace is preserved by similarity.
            let tr_a: f64 = (0..n).map(|i| a[(i, i)]).sum();
            let tr_e: f64 = f.eigenvalues().iter().map(|e| e.0).sum();
            assert!((tr_a - tr_e).abs() < 1e-10 * tr_a.abs().max(1.0));
        }
    }

    #[test]
    fn symmetric_input_gives_real_diagonal() {
        let mut rng = SeededRng::new(31);
        let g: DenseMatrix<f64> = rng.normal_matrix(10, 10);
        let a = g.add(&g.transpose()).scale(0.5);
        let f = real_schur(&a).unwrap();
        check_schur(&a, &f, 1e-12);
        assert!(f.block_sizes.iter().all(|&b| b == 1), "all real eigenvalues");
    }

    #[test]
    fn already_triangular_input() {
        let a = DenseMatrix::from_rows(3, 3, &[2.0, 1.0, 0.5, 0.0, -1.0, 0.3, 0.0, 0.0, 4.0]);
        let f = real_schur(&a).unwrap();
        check_schur(&a, &f, 1e-13);
        let mut eig: Vec<f64> = f.eigenvalues().iter().map(|e| e.0).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((eig[0] + 1.0).abs() < 1e-13);
        assert!((eig[1] - 2.0).abs() < 1e-13);
        assert!((eig[2] - 4.0).abs() < 1e-13);
    }

    #[test]
    fn defective_matrix_converges() {
        // Jordan-like block: eigenvalue 1 twice, defective.
        let a = DenseMatrix::from_rows(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1e-8, 0.0, 0.0, 2.0]);
        let f = real_schur(&a).unwrap();
        check_schur(&a, &f, 1e-11);
    }

    #[test]
    fn known_complex_spectrum() {
        // Companion matrix of x^3 - 1: eigenvalues are the cube roots of unity.
        let a = DenseMatrix::from_rows(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let f = real_schur(&a).unwrap();
        check_schur(&a, &f, 1e-13);
        let mut eig = f.eigenvalues();
        eig.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        assert!((eig[0].0 + 0.5).abs() < 1e-12);
        assert!((eig[0].1.abs() - 3.0_f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((eig[2].0 - 1.0).abs() < 1e-12);
        assert!(eig[2].1.abs() < 1e-12);
    }
}
