//! Problem generators for the benchmark families.
//!
//! Randomness discipline: every generator takes a [`SeededRng`] and draws in
//! a fixed, documented order, so a single seed reproduces every instance
//! bit for bit.
//!
//! * Trigonometric right-hand side: for each frequency vector, one normal
//!   draw for the amplitude, then one uniform draw for the phase, with
//!   frequency vectors enumerated first-component-fastest.
//! * Random spectral operator: per sampling attempt, the eigenvector matrix
//!   entries row by row, then the eigenvalues.
//! * Random low-rank right-hand side: the core entries in storage order,
//!   then the factor matrices mode by mode.

use std::f64::consts::PI;

use lrsylv::kernels::{orth, qr_thin, svd, LuFactors};
use lrsylv::tucker::{hosvd_truncate_capped, DenseTensor, TuckerTensor};
use lrsylv::{
    CoefficientOperator, CsrMatrix, DenseMatrix, Error, LowRankMatrix, Result, SeededRng,
};

use crate::spec::Boundary;

/// The grids discretize `[0, L]` with `L = 4π`.
pub const DOMAIN_LENGTH: f64 = 4.0 * PI;

/// Highest frequency per mode in the trigonometric right-hand side.
pub const MAX_FREQUENCY: i64 = 3;

/// Per-mode function dictionary size: `{1, cos x, sin x, …, cos 3x, sin 3x}`.
const TRIG_BASIS: usize = 2 * MAX_FREQUENCY as usize + 1;

/// Attempts before giving up on a well-conditioned eigenvector matrix.
const RESAMPLE_BUDGET: usize = 20;

/// Condition-number ceiling for the random eigenvector matrices.
const CONDITION_LIMIT: f64 = 1e12;

/// Grid spacing: `L/(n+1)` for Dirichlet (interior points), `L/n` for
/// periodic.
pub fn grid_spacing(n: usize, boundary: Boundary) -> f64 {
    match boundary {
        Boundary::Dirichlet => DOMAIN_LENGTH / (n as f64 + 1.0),
        Boundary::Periodic => DOMAIN_LENGTH / n as f64,
    }
}

/// Grid nodes `x_j = j·Δx`, `j = 1..=n`.
pub fn grid_points(n: usize, boundary: Boundary) -> Vec<f64> {
    let dx = grid_spacing(n, boundary);
    (1..=n).map(|j| j as f64 * dx).collect()
}

/// Second-difference operator `tridiag(1, −2, 1)/Δx²` on `[0, 4π]`:
/// tridiagonal for Dirichlet boundaries, sparse with wrap-around corner
/// entries for periodic ones.
pub fn build_poisson_operator(n: usize, boundary: Boundary) -> Result<CoefficientOperator<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid size must be at least 2, got {n}"
        )));
    }
    let w = 1.0 / grid_spacing(n, boundary).powi(2);
    match boundary {
        Boundary::Dirichlet => CoefficientOperator::tridiagonal(
            vec![w; n - 1],
            vec![-2.0 * w; n],
            vec![w; n - 1],
        ),
        Boundary::Periodic => {
            let mut triplets = Vec::with_capacity(3 * n);
            for i in 0..n {
                triplets.push((i, i, -2.0 * w));
                triplets.push((i, (i + 1) % n, w));
                triplets.push((i, (i + n - 1) % n, w));
            }
            Ok(CoefficientOperator::from_csr(CsrMatrix::from_triplets(
                n, &triplets,
            )?))
        }
    }
}

/// Closed-form spectrum of the Dirichlet operator:
/// `λ_j = −4/Δx² · sin²(jπ / (2(n+1)))`, `j = 1..=n`.
pub fn dirichlet_laplacian_eigenvalues(n: usize) -> Vec<f64> {
    let dx = grid_spacing(n, Boundary::Dirichlet);
    (1..=n)
        .map(|j| {
            let s = (j as f64 * PI / (2.0 * (n as f64 + 1.0))).sin();
            -4.0 / (dx * dx) * s * s
        })
        .collect()
}

/// Orthonormal eigenvectors of the Dirichlet operator; column `j` pairs
/// with `dirichlet_laplacian_eigenvalues(n)[j]`.
pub fn dirichlet_laplacian_eigenvectors(n: usize) -> DenseMatrix<f64> {
    let scale = (2.0 / (n as f64 + 1.0)).sqrt();
    DenseMatrix::from_fn(n, n, |i, j| {
        scale * ((i as f64 + 1.0) * (j as f64 + 1.0) * PI / (n as f64 + 1.0)).sin()
    })
}

/// Closed-form spectrum of the periodic operator:
/// `λ_j = −4/Δx² · sin²(jπ/n)`, `j = 0..n`; `λ_0 = 0` (constant nullspace).
pub fn periodic_laplacian_eigenvalues(n: usize) -> Vec<f64> {
    let dx = grid_spacing(n, Boundary::Periodic);
    (0..n)
        .map(|j| {
            let s = (j as f64 * PI / n as f64).sin();
            -4.0 / (dx * dx) * s * s
        })
        .collect()
}

/// Evaluates the per-mode dictionary `{1, cos x, sin x, cos 2x, sin 2x,
/// cos 3x, sin 3x}` on the grid (one column per function).
fn trig_basis_matrix(points: &[f64]) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(points.len(), TRIG_BASIS, |i, b| {
        if b == 0 {
            1.0
        } else {
            let m = b.div_ceil(2) as f64;
            if b % 2 == 1 {
                (m * points[i]).cos()
            } else {
                (m * points[i]).sin()
            }
        }
    })
}

/// Calls `f` for every multi-index of `shape`, first index fastest.
fn for_each_index(shape: &[usize], mut f: impl FnMut(&[usize])) {
    if shape.iter().any(|&s| s == 0) {
        return;
    }
    let mut idx = vec![0usize; shape.len()];
    loop {
        f(&idx);
        let mut i = 0;
        while i < shape.len() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == shape.len() {
            return;
        }
    }
}

/// Coefficients of the random field `Σ_k a_k cos(k·x + φ_k)` over the
/// per-mode dictionary, `k ∈ {−3,…,3}^d`.
///
/// Each summand expands exactly by the angle-addition identities into
/// products of `cos(k_i x_i)` / `sin(k_i x_i)` factors times `cos φ_k` or
/// `sin φ_k`; the products accumulate into a `7 × … × 7` coefficient
/// tensor, so the field is represented without ever forming a dense grid
/// evaluation. Draw order per `k` (first component fastest): amplitude
/// `a_k = normal()/(1 + ‖k‖₁)`, then phase `φ_k = 2π·uniform()`.
pub fn cosine_coefficient_tensor(d: usize, rng: &mut SeededRng) -> DenseTensor<f64> {
    #[derive(Clone)]
    struct Term {
        coeff: f64,
        idx: Vec<usize>,
        /// Whether the unexpanded trailing factor is `sin(rest)` rather
        /// than `cos(rest)`.
        sin_tail: bool,
    }

    let mut w = DenseTensor::zeros(&vec![TRIG_BASIS; d]).expect("dictionary shape is valid");
    let span = (2 * MAX_FREQUENCY + 1) as usize;
    for_each_index(&vec![span; d], |digits| {
        let k: Vec<i64> = digits.iter().map(|&t| t as i64 - MAX_FREQUENCY).collect();
        let one_norm: i64 = k.iter().map(|v| v.abs()).sum();
        let amplitude = rng.normal::<f64>() / (1.0 + one_norm as f64);
        let phase = 2.0 * PI * rng.uniform::<f64>();
        let mut terms = vec![Term {
            coeff: 1.0,
            idx: Vec::with_capacity(d),
            sin_tail: false,
        }];
        for &ki in &k {
            let m = ki.unsigned_abs() as usize;
            let sign = if ki < 0 { -1.0 } else { 1.0 };
            let cos_idx = if m == 0 { 0 } else { 2 * m - 1 };
            let mut next = Vec::with_capacity(terms.len() * 2);
            for t in &terms {
                // cos(k_i x_i + rest) = cos·cos(rest) − sin·sin(rest)
                // sin(k_i x_i + rest) = sin·cos(rest) + cos·sin(rest)
                let mut with_cos = t.clone();
                with_cos.idx.push(cos_idx);
                if m > 0 {
                    let mut with_sin = t.clone();
                    with_sin.idx.push(2 * m);
                    with_sin.coeff *= if t.sin_tail { sign } else { -sign };
                    with_sin.sin_tail = !t.sin_tail;
                    next.push(with_sin);
                }
                next.push(with_cos);
            }
            terms = next;
        }
        for t in &terms {
            let tail = if t.sin_tail { phase.sin() } else { phase.cos() };
            *w.at_mut(&t.idx) += amplitude * t.coeff * tail;
        }
    });
    w
}

/// Diagonal matrix from a slice.
fn diag_matrix(values: &[f64]) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            values[i]
        } else {
            0.0
        }
    })
}

/// Trigonometric right-hand side on the 2D grid, compressed to `rhs_rank`
/// by a small SVD of the dictionary coefficients.
pub fn build_cosine_rhs_matrix(
    n: usize,
    boundary: Boundary,
    rhs_rank: usize,
    rng: &mut SeededRng,
) -> Result<LowRankMatrix<f64>> {
    let w = cosine_coefficient_tensor(2, rng);
    let f = trig_basis_matrix(&grid_points(n, boundary));
    // B = F · Mat₀(W) · Fᵀ; compress through QR of the dictionary columns.
    let qf = qr_thin(&f);
    let mid = qf.r.matmul(&w.matricize(0)).matmul(&qf.r.transpose());
    let sv = svd(&mid)?;
    let keep = rhs_rank.min(sv.sigma.len()).max(1);
    Ok(LowRankMatrix::new(
        qf.q.matmul(&sv.u.leading_cols(keep)),
        diag_matrix(&sv.sigma[..keep]),
        qf.q.matmul(&sv.v.leading_cols(keep)),
    )?)
}

/// Trigonometric right-hand side on the d-dimensional grid, compressed to
/// multilinear rank `rhs_rank` per mode.
pub fn build_cosine_rhs_tensor(
    n: usize,
    d: usize,
    boundary: Boundary,
    rhs_rank: usize,
    rng: &mut SeededRng,
) -> Result<TuckerTensor<f64>> {
    let w = cosine_coefficient_tensor(d, rng);
    let f = trig_basis_matrix(&grid_points(n, boundary));
    let qf = qr_thin(&f);
    let mut core = w;
    let mut factors = Vec::with_capacity(d);
    for k in 0..d {
        core = core.mode_product(&qf.r, k)?;
        factors.push(qf.q.clone());
    }
    hosvd_truncate_capped(&TuckerTensor::new(core, factors)?, 0.0, rhs_rank)
}

/// Random operator with a prescribed real spectrum: `A = P Λ P⁻¹` with a
/// column-normalized uniform random `P` and
/// `Λ = (−1)^index · diag(uniform(n) + 1 + spec_dist·(index − 1))`,
/// `index` counted from 1. Returns the operator together with the sampled
/// eigenvalues. Resamples `P` (continuing the random stream) while its
/// condition estimate exceeds `1e12`.
pub fn build_random_spectral_operator(
    n: usize,
    index: usize,
    spec_dist: f64,
    rng: &mut SeededRng,
) -> Result<(CoefficientOperator<f64>, Vec<f64>)> {
    if index == 0 {
        return Err(Error::InvalidArgument(
            "operator index is counted from 1".into(),
        ));
    }
    let sign = if index % 2 == 1 { -1.0 } else { 1.0 };
    let shift = 1.0 + spec_dist * (index as f64 - 1.0);
    for _ in 0..RESAMPLE_BUDGET {
        let mut p = rng.uniform_matrix::<f64>(n, n);
        for j in 0..n {
            let norm = p.col(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let col: Vec<f64> = p.col(j).iter().map(|v| v / norm).collect();
            p.set_col(j, &col);
        }
        let lambda: Vec<f64> = (0..n)
            .map(|_| sign * (rng.uniform::<f64>() + shift))
            .collect();
        let sv = svd(&p)?;
        let smallest = sv.sigma[sv.sigma.len() - 1];
        if !(smallest > 0.0) || sv.sigma[0] / smallest > CONDITION_LIMIT {
            continue;
        }
        // A = (P Λ) P⁻¹, computed as the solution of A P = P Λ.
        let mut pl = p.clone();
        for j in 0..n {
            let col: Vec<f64> = pl.col(j).iter().map(|v| v * lambda[j]).collect();
            pl.set_col(j, &col);
        }
        let lu = LuFactors::factor(&p.transpose())?;
        let a = lu.solve_matrix(&pl.transpose()).transpose();
        return Ok((CoefficientOperator::from_dense(a)?, lambda));
    }
    Err(Error::NonConvergence(
        "no well-conditioned eigenvector matrix within the resample budget",
    ))
}

/// Random low-rank right-hand side: uniform core, orthonormalized Gaussian
/// factors. Draw order: core entries, then the two factors.
pub fn build_random_low_rank_rhs(
    n: usize,
    rank: usize,
    rng: &mut SeededRng,
) -> Result<LowRankMatrix<f64>> {
    if rank == 0 || rank > n {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} out of range for size {n}"
        )));
    }
    let s = rng.uniform_matrix::<f64>(rank, rank);
    let u = orth(&rng.normal_matrix::<f64>(n, rank))?;
    let v = orth(&rng.normal_matrix::<f64>(n, rank))?;
    LowRankMatrix::new(u, s, v)
}

/// Random Tucker right-hand side: uniform core, orthonormalized Gaussian
/// factors. Draw order: core entries in storage order, then the factors
/// mode by mode.
pub fn build_random_tucker_rhs(
    n: usize,
    d: usize,
    rank: usize,
    rng: &mut SeededRng,
) -> Result<TuckerTensor<f64>> {
    if rank == 0 || rank > n {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} out of range for size {n}"
        )));
    }
    let core = DenseTensor::from_fn(&vec![rank; d], |_| rng.uniform::<f64>())?;
    let factors: Result<Vec<DenseMatrix<f64>>> = (0..d)
        .map(|_| orth(&rng.normal_matrix::<f64>(n, rank)))
        .collect();
    TuckerTensor::new(core, factors?)
}

/// Removes the component of `b` along the normalized all-ones rank-one
/// direction (the joint nullspace of the periodic operators) and returns
/// the signed component that was removed.
pub fn project_off_constant_matrix(b: &LowRankMatrix<f64>) -> Result<(LowRankMatrix<f64>, f64)> {
    let (m, n) = (b.u.rows(), b.v.rows());
    let e_m = DenseMatrix::from_fn(m, 1, |_, _| 1.0 / (m as f64).sqrt());
    let e_n = DenseMatrix::from_fn(n, 1, |_, _| 1.0 / (n as f64).sqrt());
    let c = e_m
        .t_mul(&b.u)
        .matmul(&b.s)
        .matmul(&b.v.t_mul(&e_n))
        .data()[0];
    let neg = DenseMatrix::from_fn(1, 1, |_, _| -c);
    let qu = qr_thin(&DenseMatrix::hstack(&[&b.u, &e_m]));
    let qv = qr_thin(&DenseMatrix::hstack(&[&b.v, &e_n]));
    let mid = qu
        .r
        .matmul(&DenseMatrix::block_diag(&[&b.s, &neg]))
        .matmul(&qv.r.transpose());
    let sv = svd(&mid)?;
    let cutoff = 1e-14 * sv.sigma[0].max(f64::MIN_POSITIVE);
    let keep = sv.sigma.iter().take_while(|&&s| s > cutoff).count().max(1);
    let projected = LowRankMatrix::new(
        qu.q.matmul(&sv.u.leading_cols(keep)),
        diag_matrix(&sv.sigma[..keep]),
        qv.q.matmul(&sv.v.leading_cols(keep)),
    )?;
    Ok((projected, c))
}

/// Tensor counterpart of [`project_off_constant_matrix`]: removes the
/// component along the normalized all-ones rank-one tensor.
pub fn project_off_constant_tensor(b: &TuckerTensor<f64>) -> Result<(TuckerTensor<f64>, f64)> {
    let dims = b.dims();
    let ranks = b.ranks();
    let mut comp = b.core.clone();
    for (i, u) in b.factors.iter().enumerate() {
        let e_row = DenseMatrix::from_fn(1, dims[i], |_, _| 1.0 / (dims[i] as f64).sqrt());
        comp = comp.mode_product(&e_row.matmul(u), i)?;
    }
    let c = comp.data()[0];
    let grown: Vec<usize> = ranks.iter().map(|r| r + 1).collect();
    let mut core = DenseTensor::zeros(&grown)?;
    for_each_index(&ranks, |idx| {
        *core.at_mut(idx) = b.core.at(idx);
    });
    *core.at_mut(&ranks) = -c;
    let mut factors = Vec::with_capacity(b.ndim());
    for (i, u) in b.factors.iter().enumerate() {
        let e_col = DenseMatrix::from_fn(dims[i], 1, |_, _| 1.0 / (dims[i] as f64).sqrt());
        let qf = qr_thin(&DenseMatrix::hstack(&[u, &e_col]));
        core = core.mode_product(&qf.r, i)?;
        factors.push(qf.q);
    }
    Ok((TuckerTensor::new(core, factors)?, c))
}
