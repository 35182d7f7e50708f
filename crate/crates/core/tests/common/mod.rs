//! Shared helpers for the integration tests: an independent cyclic-Jacobi
//! symmetric eigensolver used as an oracle against the SVD and Schur
//! kernels, plus small assembly utilities.

use lrsylv::{DenseMatrix, SeededRng};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, returned in
/// descending order. Deliberately shares no code with the library kernels:
/// it diagonalizes with two-sided rotations and never forms a Hessenberg or
/// bidiagonal intermediate.
pub fn jacobi_eigenvalues(a: &DenseMatrix<f64>) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "jacobi oracle needs a square matrix");
    let mut m = a.clone();
    let scale = a.fro_norm().max(1.0);
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eigs
}

/// Largest absolute entry of `QᵀQ − I`.
pub fn orthonormality_defect(q: &DenseMatrix<f64>) -> f64 {
    q.t_mul(q).max_abs_diff(&DenseMatrix::identity(q.cols()))
}

/// Random matrix with entries drawn from the given seed, so proptest can
/// shrink over `(rows, cols, seed)` triples.
pub fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix<f64> {
    SeededRng::new(seed).normal_matrix(rows, cols)
}

/// The eigenvalue multiset of a quasi-upper-triangular matrix: real parts of
/// 1×1 blocks, real parts (twice) of complex-pair 2×2 blocks, sorted
/// descending together with a parallel list of squared imaginary parts.
pub fn quasi_triangular_spectrum(t: &DenseMatrix<f64>) -> Vec<(f64, f64)> {
    let n = t.rows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let a = t[(i, i)];
            let b = t[(i, i + 1)];
            let c = t[(i + 1, i)];
            let d = t[(i + 1, i + 1)];
            let re = (a + d) / 2.0;
            // For a standardized 2x2 block the eigenvalues are re ± sqrt(disc)
            // with disc = ((a-d)/2)^2 + bc < 0 on complex pairs.
            let disc = ((a - d) / 2.0) * ((a - d) / 2.0) + b * c;
            out.push((re, -disc.min(0.0)));
            out.push((re, -disc.min(0.0)));
            i += 2;
        } else {
            out.push((t[(i, i)], 0.0));
            i += 1;
        }
    }
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    out
}
