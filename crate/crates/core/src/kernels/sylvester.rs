//! Bartels–Stewart solver for `A X + X Bᵀ = C` with dense coefficients:
//! transform both sides to real Schur form, back-substitute over the
//! quasi-triangular blocks, transform back. 2x2 blocks (complex-conjugate
//! eigenvalue pairs) are handled as small coupled real systems — no complex
//! arithmetic anywhere.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kernels::oracle::LuFactors;
use crate::kernels::schur::{real_schur, SchurFactors};
use crate::kernels::svd::svd_min_norm_solve;
use crate::scalar::Scalar;

/// How back-substitution treats a singular diagonal-block system (the sign
/// that the coefficient spectra intersect).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SingularBlockPolicy {
    /// Fail with [`Error::Singular`].
    Reject,
    /// Resolve the block by minimum-norm least squares. When the overall
    /// equation is consistent despite the singular pencil this yields a
    /// bounded particular solution; inconsistent components are simply left
    /// at their least-squares residual. Nonsingular blocks take the exact
    /// same LU path as [`SingularBlockPolicy::Reject`].
    MinNormLeastSquares,
}

/// Diagonal blocks of a quasi-triangular matrix as `(start, size)` pairs.
pub(crate) fn block_layout(f: &SchurFactors<impl Scalar>) -> Vec<(usize, usize)> {
    f.block_starts()
        .into_iter()
        .zip(f.block_sizes.iter().copied())
        .collect()
}

/// Solve `T Y + Y Sᵀ = RHS` where `T` is quasi-upper-triangular with the given
/// block layout and `S` is a small (`w <= 2`) dense matrix, by
/// back-substitution over `T`'s blocks from bottom-right to top-left. Each
/// diagonal block yields a dense system of size `block * w`.
///
/// This one routine backs the Bartels–Stewart inner loop, the shifted solves
/// of dense operators, and the mixed-size solver: a scalar shift is the `w=1`
/// case and a 2x2 block shift the `w=2` case.
pub(crate) fn solve_coupled_columns<T: Scalar>(
    t: &DenseMatrix<T>,
    layout: &[(usize, usize)],
    s_small: &DenseMatrix<T>,
    rhs: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    solve_coupled_columns_policy(t, layout, s_small, rhs, SingularBlockPolicy::Reject)
}

/// [`solve_coupled_columns`] with an explicit singular-block policy.
pub(crate) fn solve_coupled_columns_policy<T: Scalar>(
    t: &DenseMatrix<T>,
    layout: &[(usize, usize)],
    s_small: &DenseMatrix<T>,
    rhs: &DenseMatrix<T>,
    policy: SingularBlockPolicy,
) -> Result<DenseMatrix<T>> {
    let m = t.rows();
    let w = s_small.rows();
    assert!(s_small.is_square() && rhs.rows() == m && rhs.cols() == w, "coupled columns: shape");
    let mut y = DenseMatrix::zeros(m, w);
    for &(p, b) in layout.iter().rev() {
        // Right-hand side for this block: subtract coupling to solved rows.
        let mut r = DenseMatrix::zeros(b, w);
        for i in 0..b {
            for j in 0..w {
                let mut s = rhs[(p + i, j)];
                for q in p + b..m {
                    s -= t[(p + i, q)] * y[(q, j)];
                }
                r[(i, j)] = s;
            }
        }
        // Dense system for the block unknowns, column-stacked: index i + b*j.
        let bw = b * w;
        let mut sys = DenseMatrix::zeros(bw, bw);
        for i in 0..b {
            for j in 0..w {
                let row = i + b * j;
                for k in 0..b {
                    sys[(row, k + b * j)] += t[(p + i, p + k)];
                }
                for l in 0..w {
                    sys[(row, i + b * l)] += s_small[(j, l)];
                }
            }
        }
        let mut rv = Vec::with_capacity(bw);
        for j in 0..w {
            for i in 0..b {
                rv.push(r[(i, j)]);
            }
        }
        match LuFactors::factor(&sys) {
            Ok(lu) => lu.solve_in_place(&mut rv),
            Err(_) if policy == SingularBlockPolicy::MinNormLeastSquares => {
                rv = svd_min_norm_solve(&sys, &rv)?;
            }
            Err(_) => {
                return Err(Error::Singular(format!(
                    "coupled diagonal block at row {p}: coefficient spectra intersect"
                )));
            }
        }
        for j in 0..w {
            for i in 0..b {
                y[(p + i, j)] = rv[i + b * j];
            }
        }
    }
    Ok(y)
}

/// Bartels–Stewart with precomputed Schur factorizations of both coefficients.
pub fn solve_sylvester_schur<T: Scalar>(
    sa: &SchurFactors<T>,
    sb: &SchurFactors<T>,
    c: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    solve_sylvester_schur_policy(sa, sb, c, SingularBlockPolicy::Reject)
}

pub(crate) fn solve_sylvester_schur_policy<T: Scalar>(
    sa: &SchurFactors<T>,
    sb: &SchurFactors<T>,
    c: &DenseMatrix<T>,
    policy: SingularBlockPolicy,
) -> Result<DenseMatrix<T>> {
    let (m, n) = (sa.t.rows(), sb.t.rows());
    if c.rows() != m || c.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "sylvester: C is {}x{}, expected {}x{}",
            c.rows(),
            c.cols(),
            m,
            n
        )));
    }
    let f = sa.q.t_mul(c).matmul(&sb.q);
    let a_layout = block_layout(sa);
    let b_layout = block_layout(sb);
    let mut y = DenseMatrix::zeros(m, n);
    // Column blocks of Y couple rightward through T_Bᵀ, so solve right-to-left.
    for &(q0, wb) in b_layout.iter().rev() {
        let mut rhs = DenseMatrix::zeros(m, wb);
        for jj in 0..wb {
            for i in 0..m {
                let mut s = f[(i, q0 + jj)];
                for k in q0 + wb..n {
                    s -= sb.t[(q0 + jj, k)] * y[(i, k)];
                }
                rhs[(i, jj)] = s;
            }
        }
        let s_small = sb.t.block(q0, q0 + wb, q0, q0 + wb);
        let yb = solve_coupled_columns_policy(&sa.t, &a_layout, &s_small, &rhs, policy)?;
        for jj in 0..wb {
            for i in 0..m {
                y[(i, q0 + jj)] = yb[(i, jj)];
            }
        }
    }
    Ok(sa.q.matmul(&y).mul_t(&sb.q))
}

/// Solve `A X + X Bᵀ = C` for dense square `A`, `B`. Fails with
/// [`Error::Singular`] when the spectra of `A` and `-B` intersect.
pub fn solve_sylvester_dense<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::DimensionMismatch(
            "sylvester: coefficients must be square".into(),
        ));
    }
    let sa = real_schur(a)?;
    let sb = real_schur(b)?;
    solve_sylvester_schur(&sa, &sb, c)
}

/// Like [`solve_sylvester_dense`], but a singular pencil (intersecting
/// spectra of `A` and `-B`) does not fail: the affected diagonal blocks of
/// the transformed system are resolved by minimum-norm least squares. For an
/// equation that is consistent despite the singular pencil — a Galerkin
/// projection of a compatible singular problem, say — this returns a bounded
/// particular solution; nonsingular problems get the exact Bartels–Stewart
/// answer, bit for bit.
pub fn solve_sylvester_dense_min_norm<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::DimensionMismatch(
            "sylvester: coefficients must be square".into(),
        ));
    }
    let sa = real_schur(a)?;
    let sb = real_schur(b)?;
    solve_sylvester_schur_policy(&sa, &sb, c, SingularBlockPolicy::MinNormLeastSquares)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::oracle::solve_sylvester_kron_oracle;
    use crate::rng::SeededRng;

    fn residual(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>, c: &DenseMatrix<f64>, x: &DenseMatrix<f64>) -> f64 {
        a.matmul(x).add(&x.mul_t(b)).sub(c).fro_norm()
    }

    #[test]
    fn matches_diagonal_closed_form() {
        let a: DenseMatrix<f64> = DenseMatrix::from_rows(2, 2, &[2.0, 0.0, 0.0, 5.0]);
        let b = DenseMatrix::from_rows(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let c = DenseMatrix::from_rows(2, 2, &[3.0, 5.0, 6.0, 8.0]);
        let x = solve_sylvester_dense(&a, &b, &c).unwrap();
        for (i, ai) in [2.0, 5.0].iter().enumerate() {
            for (j, bj) in [1.0, 3.0].iter().enumerate() {
                assert!((x[(i, j)] - c[(i, j)] / (ai + bj)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn random_cases_match_kron_oracle() {
        let mut rng = SeededRng::new(40);
        for trial in 0..25 {
            let m = 2 + (trial % 9);
            let n = 2 + (trial % 7);
            // Diagonal shift keeps the spectra of A and -B apart.
            let a = rng
                .normal_matrix::<f64>(m, m)
                .add(&DenseMatrix::identity(m).scale(3.0));
            let b = rng
                .normal_matrix::<f64>(n, n)
                .add(&DenseMatrix::identity(n).scale(3.0));
            let c: DenseMatrix<f64> = rng.normal_matrix(m, n);
            let x = solve_sylvester_dense(&a, &b, &c).unwrap();
            let want = solve_sylvester_kron_oracle(&a, &b, &c).unwrap();
            let denom = want.fro_norm().max(1.0);
            assert!(
                x.sub(&want).fro_norm() < 1e-11 * denom,
                "trial {trial}: diff {}",
                x.sub(&want).fro_norm() / denom
            );
        }
    }

    #[test]
    fn complex_spectra_blocks_match_oracle() {
        // Coefficients built from rotation blocks so both Schur forms have
        // genuine 2x2 blocks, exercising the coupled path.
        let mut rng = SeededRng::new(41);
        let rot = |s: f64, w: f64| DenseMatrix::from_rows(2, 2, &[s, w, -w, s]);
        let a0 = DenseMatrix::block_diag(&[&rot(2.0, 1.0), &rot(3.0, 0.5)]);
        let b0 = DenseMatrix::block_diag(&[&rot(1.5, 2.0), &rot(2.5, 1.0)]);
        // Conjugate by random orthogonal factors to hide the structure.
        let qa = crate::kernels::qr::orth(&rng.normal_matrix::<f64>(4, 4)).unwrap();
        let qb = crate::kernels::qr::orth(&rng.normal_matrix::<f64>(4, 4)).unwrap();
        let a = qa.matmul(&a0).mul_t(&qa);
        let b = qb.matmul(&b0).mul_t(&qb);
        let c: DenseMatrix<f64> = rng.normal_matrix(4, 4);
        let x = solve_sylvester_dense(&a, &b, &c).unwrap();
        let want = solve_sylvester_kron_oracle(&a, &b, &c).unwrap();
        assert!(x.sub(&want).fro_norm() < 1e-12 * want.fro_norm().max(1.0));
        assert!(residual(&a, &b, &c, &x) < 1e-12);
    }

    #[test]
    fn rectangular_solution_shapes() {
        let mut rng = SeededRng::new(42);
        let a = rng
            .normal_matrix::<f64>(7, 7)
            .add(&DenseMatrix::identity(7).scale(4.0));
        let b = rng
            .normal_matrix::<f64>(3, 3)
            .add(&DenseMatrix::identity(3).scale(4.0));
        let c: DenseMatrix<f64> = rng.normal_matrix(7, 3);
        let x = solve_sylvester_dense(&a, &b, &c).unwrap();
        assert_eq!((x.rows(), x.cols()), (7, 3));
        assert!(residual(&a, &b, &c, &x) < 1e-12 * c.fro_norm());
    }

    #[test]
    fn intersecting_spectra_reported_singular() {
        let a = DenseMatrix::from_rows(1, 1, &[1.0]);
        let b = DenseMatrix::from_rows(1, 1, &[-1.0]);
        let c = DenseMatrix::from_rows(1, 1, &[1.0]);
        assert!(matches!(
            solve_sylvester_dense(&a, &b, &c),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn min_norm_solves_consistent_singular_equation() {
        // Diagonal coefficients with a_0 = b_0 = 0 make the (0,0) entry of
        // the vectorized system exactly zero: the strict solver must refuse,
        // and the min-norm variant must return the bounded solution
        // X_ij = C_ij / (a_i + b_j) with X_00 = 0 for the compatible C
        // (c_00 = 0).
        let a: DenseMatrix<f64> =
            DenseMatrix::from_rows(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let b = DenseMatrix::from_rows(2, 2, &[0.0, 0.0, 0.0, 3.0]);
        let c = DenseMatrix::from_rows(3, 2, &[0.0, 6.0, 2.0, 8.0, 4.0, 10.0]);
        assert!(matches!(
            solve_sylvester_dense(&a, &b, &c),
            Err(Error::Singular(_))
        ));
        let x = solve_sylvester_dense_min_norm(&a, &b, &c).unwrap();
        let av = [0.0, 1.0, 2.0];
        let bv = [0.0, 3.0];
        for i in 0..3 {
            for j in 0..2 {
                let want = if i == 0 && j == 0 {
                    0.0
                } else {
                    c[(i, j)] / (av[i] + bv[j])
                };
                assert!((x[(i, j)] - want).abs() < 1e-13, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn min_norm_is_bitwise_identical_on_nonsingular_problems() {
        let mut rng = SeededRng::new(44);
        let a = rng
            .normal_matrix::<f64>(8, 8)
            .add(&DenseMatrix::identity(8).scale(3.0));
        let b = rng
            .normal_matrix::<f64>(6, 6)
            .add(&DenseMatrix::identity(6).scale(3.0));
        let c: DenseMatrix<f64> = rng.normal_matrix(8, 6);
        let strict = solve_sylvester_dense(&a, &b, &c).unwrap();
        let lenient = solve_sylvester_dense_min_norm(&a, &b, &c).unwrap();
        assert_eq!(strict.data(), lenient.data());
    }

    #[test]
    fn schur_reuse_matches_fresh_solve() {
        let mut rng = SeededRng::new(43);
        let a = rng
            .normal_matrix::<f64>(6, 6)
            .add(&DenseMatrix::identity(6).scale(3.0));
        let b = rng
            .normal_matrix::<f64>(6, 6)
            .add(&DenseMatrix::identity(6).scale(3.0));
        let sa = real_schur(&a).unwrap();
        let sb = real_schur(&b).unwrap();
        for _ in 0..3 {
            let c: DenseMatrix<f64> = rng.normal_matrix(6, 6);
            let x1 = solve_sylvester_schur(&sa, &sb, &c).unwrap();
            let x2 = solve_sylvester_dense(&a, &b, &c).unwrap();
            assert_eq!(x1.data(), x2.data(), "identical code path, identical bits");
        }
    }
}
