//! Property tests for the dense kernels: orthogonality contracts of QR,
//! reconstruction and ordering contracts of the SVD, structure and
//! similarity contracts of the real Schur form, and the minimality of the
//! singular-value truncation rule. Eigenvalue claims are checked against an
//! independent Jacobi eigensolver (`common::jacobi_eigenvalues`) that shares
//! no code with the library.

mod common;

use common::{jacobi_eigenvalues, orthonormality_defect, quasi_triangular_spectrum, seeded_matrix};
use lrsylv::bug::truncate_rank;
use lrsylv::kernels::{
    orth, qr_thin, real_schur, solve_sylvester_dense, solve_sylvester_kron_oracle, svd,
};
use lrsylv::DenseMatrix;
use proptest::prelude::*;

fn tall_dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=12).prop_flat_map(|cols| (cols..=18usize, Just(cols)))
}

fn any_dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=14, 1usize..=14)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn orth_output_is_orthonormal_even_when_rank_deficient((rows, cols) in tall_dims(), seed in 0u64..1 << 40, degenerate: bool) {
        let mut m = seeded_matrix(rows, cols, seed);
        if degenerate && cols >= 2 {
            // Copy column 0 over column 1 so the input loses a rank.
            for i in 0..rows {
                m[(i, 1)] = m[(i, 0)];
            }
        }
        let q = orth(&m).unwrap();
        prop_assert_eq!(q.rows(), rows);
        prop_assert_eq!(q.cols(), cols);
        prop_assert!(orthonormality_defect(&q) < 1e-12);
    }

    #[test]
    fn qr_reconstructs_with_triangular_nonnegative_r((rows, cols) in tall_dims(), seed in 0u64..1 << 40) {
        let m = seeded_matrix(rows, cols, seed);
        let f = qr_thin(&m);
        prop_assert!(orthonormality_defect(&f.q) < 1e-12);
        let back = f.q.matmul(&f.r);
        prop_assert!(back.max_abs_diff(&m) < 1e-10 * m.fro_norm().max(1.0));
        for i in 0..f.r.rows() {
            prop_assert!(f.r[(i, i)] >= 0.0, "R diagonal must be non-negative");
            for j in 0..i.min(f.r.cols()) {
                prop_assert_eq!(f.r[(i, j)], 0.0, "R must be upper triangular");
            }
        }
    }

    #[test]
    fn svd_reconstructs_with_ordered_singular_values((rows, cols) in any_dims(), seed in 0u64..1 << 40) {
        let m = seeded_matrix(rows, cols, seed);
        let f = svd(&m).unwrap();
        prop_assert!(orthonormality_defect(&f.u) < 1e-12);
        prop_assert!(orthonormality_defect(&f.v) < 1e-12);
        let k = rows.min(cols);
        prop_assert_eq!(f.sigma.len(), k);
        for i in 0..k {
            prop_assert!(f.sigma[i] >= 0.0);
            if i + 1 < k {
                prop_assert!(f.sigma[i] >= f.sigma[i + 1], "singular values must be nonincreasing");
            }
        }
        let mut sdiag = DenseMatrix::zeros(k, k);
        for i in 0..k {
            sdiag[(i, i)] = f.sigma[i];
        }
        let back = f.u.matmul(&sdiag).mul_t(&f.v);
        prop_assert!(back.max_abs_diff(&m) < 1e-9 * m.fro_norm().max(1.0));
    }

    #[test]
    fn singular_values_match_jacobi_gram_oracle((rows, cols) in any_dims(), seed in 0u64..1 << 40) {
        let m = seeded_matrix(rows, cols, seed);
        let f = svd(&m).unwrap();
        // Independent route: eigenvalues of the Gram matrix MᵀM are σ².
        let gram = m.t_mul(&m);
        let eigs = jacobi_eigenvalues(&gram);
        let tol = 1e-8 * (1.0 + f.sigma.first().copied().unwrap_or(0.0)).powi(2);
        for (i, &s) in f.sigma.iter().enumerate() {
            prop_assert!((s * s - eigs[i].max(0.0)).abs() < tol,
                "sigma[{}]^2 = {} vs jacobi {}", i, s * s, eigs[i]);
        }
    }

    #[test]
    fn schur_is_an_orthogonal_similarity(n in 1usize..=14, seed in 0u64..1 << 40) {
        let m = seeded_matrix(n, n, seed);
        let f = real_schur(&m).unwrap();
        prop_assert!(orthonormality_defect(&f.q) < 1e-12);
        let back = f.q.matmul(&f.t).mul_t(&f.q);
        prop_assert!(back.max_abs_diff(&m) < 1e-9 * m.fro_norm().max(1.0));
        // Strict zeros below the first subdiagonal, and no adjacent 2x2 blocks
        // overlapping: a nonzero subdiagonal entry must be isolated.
        for i in 0..n {
            for j in 0..i.saturating_sub(1) {
                prop_assert_eq!(f.t[(i, j)], 0.0);
            }
        }
        let mut i = 0;
        while i + 1 < n {
            if f.t[(i + 1, i)] != 0.0 {
                if i + 2 < n {
                    prop_assert_eq!(f.t[(i + 2, i + 1)], 0.0, "2x2 blocks may not chain");
                }
                i += 2;
            } else {
                i += 1;
            }
        }
        // Standardized 2x2 blocks carry complex pairs only.
        for (_, imag_sq) in quasi_triangular_spectrum(&f.t) {
            prop_assert!(imag_sq >= 0.0);
        }
        // Orthogonal similarity preserves trace and Frobenius norm.
        let tr_m: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let tr_t: f64 = (0..n).map(|i| f.t[(i, i)]).sum();
        prop_assert!((tr_m - tr_t).abs() < 1e-9 * m.fro_norm().max(1.0));
        prop_assert!((m.fro_norm() - f.t.fro_norm()).abs() < 1e-9 * m.fro_norm().max(1.0));
    }

    #[test]
    fn symmetric_schur_eigenvalues_match_jacobi(n in 1usize..=12, seed in 0u64..1 << 40) {
        let raw = seeded_matrix(n, n, seed);
        let sym = raw.add(&raw.transpose()).scale(0.5);
        let f = real_schur(&sym).unwrap();
        let spectrum = quasi_triangular_spectrum(&f.t);
        let jacobi = jacobi_eigenvalues(&sym);
        let tol = 1e-8 * sym.fro_norm().max(1.0);
        for (i, &(re, imag_sq)) in spectrum.iter().enumerate() {
            prop_assert!(imag_sq.sqrt() < tol, "symmetric spectrum must be real");
            prop_assert!((re - jacobi[i]).abs() < tol, "eig {} = {} vs jacobi {}", i, re, jacobi[i]);
        }
    }

    #[test]
    fn truncation_rule_returns_minimal_feasible_rank(len in 1usize..=12, seed in 0u64..1 << 40, theta_exp in -12i32..=2) {
        let mut rng = lrsylv::SeededRng::new(seed);
        let mut sigma: Vec<f64> = (0..len).map(|_| rng.uniform::<f64>()).collect();
        sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let theta = 10f64.powi(theta_exp);
        let r = truncate_rank(&sigma, theta);
        prop_assert!(r >= 1 && r <= len);
        let tail = |k: usize| -> f64 {
            sigma[k..].iter().map(|s| s * s).sum::<f64>().sqrt()
        };
        // The returned rank satisfies the tail bound unless even the full
        // size cannot (never happens: the full tail is empty)...
        prop_assert!(tail(r) <= theta || r == len);
        // ...and no smaller rank above the floor does.
        if r > 1 {
            prop_assert!(tail(r - 1) > theta, "rank {} is not minimal", r);
        }
        // Monotonicity: a looser threshold never keeps more.
        let r_loose = truncate_rank(&sigma, theta * 10.0);
        prop_assert!(r_loose <= r);
    }

    #[test]
    fn dense_sylvester_matches_kron_oracle(m in 1usize..=8, n in 1usize..=8, seed in 0u64..1 << 40) {
        let mut rng = lrsylv::SeededRng::new(seed);
        // Shift both spectra right so A and -B stay disjoint.
        let a = rng.normal_matrix::<f64>(m, m).add(&DenseMatrix::identity(m).scale(6.0));
        let b = rng.normal_matrix::<f64>(n, n).add(&DenseMatrix::identity(n).scale(6.0));
        let c = rng.normal_matrix::<f64>(m, n);
        let x = solve_sylvester_dense(&a, &b, &c).unwrap();
        let want = solve_sylvester_kron_oracle(&a, &b, &c).unwrap();
        prop_assert!(x.max_abs_diff(&want) < 1e-10 * want.fro_norm().max(1.0));
    }
}
