//! Tensor solvers for `Σ_i X ×_i A_i = B` in Tucker form: per-mode
//! basis-update steps, the projected core solve, the factored residual
//! norm, HOSVD truncation, and the fixed-rank / rank-adaptive drivers.

use crate::bug::steps::truncate_rank;
use crate::bug::{
    initial_prev_err, stopping_decision, BugConfig, ConvergenceTrace, ThetaRule, TraceRecord,
    SINGULAR_PENCIL_RETRIES,
};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kernels::norms::entry_count_scale;
use crate::kernels::oracle::LuFactors;
use crate::kernels::qr::{orth, orth_limited, qr_thin};
use crate::kernels::schur::real_schur;
use crate::kernels::svd::{svd, svd_min_norm_solve};
use crate::kernels::sylvester::block_layout;
use crate::operators::{solve_sylvester_large_small, CoefficientOperator};
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::tucker::algebra::{index_iter, DenseTensor, TuckerTensor};
use crate::tucker::reduction::{apply_kron_to_columns, ModeReduction};

/// Hard ceiling on the projected core's unknown count. The Schur route
/// needs only linear memory in the unknown count, so the cap exists to
/// refuse runaway exponential cores (high mode counts at high ranks), not
/// to bound ordinary three-mode solves.
pub const CORE_UNKNOWNS_CAP: usize = 1 << 21;

/// Below this unknown count the core solve eliminates densely; above it,
/// per-mode Schur reduction with block back-substitution takes over.
const CORE_DENSE_MAX: usize = 512;

/// One basis-update solve: `A_k K + K Σ_{j≠k} P_jk = Mat_k(B)·V_k` for the
/// mode-`k` subspace update, with every right-hand-side product evaluated in
/// factored form.
pub fn tucker_k_step<T: Scalar>(
    ops: &[CoefficientOperator<T>],
    b: &TuckerTensor<T>,
    x: &TuckerTensor<T>,
    k: usize,
) -> Result<DenseMatrix<T>> {
    check_rhs_shape(ops, b)?;
    let red = ModeReduction::new(ops, x, k)?;
    let rk = x.ranks()[k];
    let mut coupling = DenseMatrix::zeros(rk, rk);
    for j in (0..x.ndim()).filter(|&j| j != k) {
        coupling = coupling.add(&red.build_p(j)?);
    }
    // Mat_k(B)·V_k = U_kᴮ · Mat_k(C_B) · (⊗_{j≠k} U_jᴮᵀ U_j) · Q_k.
    let projections: Vec<DenseMatrix<T>> = (0..x.ndim())
        .filter(|&j| j != k)
        .map(|j| b.factors[j].t_mul(&x.factors[j]))
        .collect();
    let refs: Vec<&DenseMatrix<T>> = projections.iter().collect();
    let carried = apply_kron_to_columns(&refs, red.reduced_shape(), &red.q)?;
    let rhs = b.factors[k].matmul(&b.core.matricize(k).matmul(&carried));
    // The mixed solver expects the transposed small side.
    solve_sylvester_large_small(&ops[k], &coupling.transpose(), &rhs)
}

/// Galerkin core solve: `Σ_i core ×_i (U_iᵀ A_i U_i) = B ×_i U_iᵀ` at the
/// given factors. Dense elimination for small cores; per-mode Schur
/// reduction with block back-substitution for large ones.
pub fn core_step<T: Scalar>(
    ops: &[CoefficientOperator<T>],
    b: &TuckerTensor<T>,
    factors: &[DenseMatrix<T>],
) -> Result<DenseTensor<T>> {
    check_rhs_shape(ops, b)?;
    if factors.len() != ops.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} factors for {} operators",
            factors.len(),
            ops.len()
        )));
    }
    for (k, f) in factors.iter().enumerate() {
        if f.rows() != ops[k].dim() {
            return Err(Error::DimensionMismatch(format!(
                "factor {} has {} rows but operator dim is {}",
                k,
                f.rows(),
                ops[k].dim()
            )));
        }
    }
    let ranks: Vec<usize> = factors.iter().map(|f| f.cols()).collect();
    let unknowns: usize = ranks.iter().product();
    if unknowns > CORE_UNKNOWNS_CAP {
        return Err(Error::CapExceeded(format!(
            "projected core has {} unknowns, cap is {}",
            unknowns, CORE_UNKNOWNS_CAP
        )));
    }
    let projected: Vec<DenseMatrix<T>> = factors
        .iter()
        .zip(ops.iter())
        .map(|(u, op)| u.t_mul(&op.apply(u)))
        .collect();
    let mut rhs = b.core.clone();
    for (j, u) in factors.iter().enumerate() {
        rhs = rhs.mode_product(&u.t_mul(&b.factors[j]), j)?;
    }
    if unknowns <= CORE_DENSE_MAX {
        let mut sys = DenseMatrix::zeros(unknowns, unknowns);
        for (i, g) in projected.iter().enumerate() {
            sys = sys.add(&crate::tucker::oracle::kron_slot_matrix(&ranks, i, g));
        }
        let solution = match LuFactors::factor(&sys) {
            Ok(lu) => lu.solve_vec(&rhs.mode0_vec()),
            // Singular projected pencil: on compatible singular problems the
            // bases eventually capture the operators' shared nullspace, so
            // resolve the core by minimum-norm least squares instead of
            // failing (the matrix-side S-step does the same).
            Err(Error::Singular(_)) => svd_min_norm_solve(&sys, &rhs.mode0_vec())?,
            Err(e) => return Err(e),
        };
        DenseTensor::from_mode0_vec(&ranks, solution)
    } else {
        let schurs: Vec<_> = projected
            .iter()
            .map(real_schur)
            .collect::<Result<Vec<_>>>()?;
        let mut reduced = rhs;
        for (k, sf) in schurs.iter().enumerate() {
            reduced = reduced.mode_product(&sf.q.transpose(), k)?;
        }
        let ts: Vec<&DenseMatrix<T>> = schurs.iter().map(|sf| &sf.t).collect();
        let layouts: Vec<Vec<(usize, usize)>> = schurs.iter().map(block_layout).collect();
        let mut solution = solve_quasi_triangular_sum(&ts, &layouts, &reduced)?;
        for (k, sf) in schurs.iter().enumerate() {
            solution = solution.mode_product(&sf.q, k)?;
        }
        Ok(solution)
    }
}

/// Solves `Σ_k X ×_k T_k = R` where every `T_k` is quasi-upper-triangular
/// with the given diagonal block layout. Composite blocks (products of one
/// diagonal block per mode) are eliminated in an order that visits every
/// coupled block first; each composite block is a small dense system.
fn solve_quasi_triangular_sum<T: Scalar>(
    ts: &[&DenseMatrix<T>],
    layouts: &[Vec<(usize, usize)>],
    rhs: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    let d = ts.len();
    let shape = rhs.shape().to_vec();
    let strides: Vec<usize> = {
        let mut s = vec![1usize; d];
        for k in 1..d {
            s[k] = s[k - 1] * shape[k - 1];
        }
        s
    };
    let mut x = DenseTensor::zeros(&shape)?;
    let block_counts: Vec<usize> = layouts.iter().map(|l| l.len()).collect();
    let total_blocks: usize = block_counts.iter().product();
    for bl in (0..total_blocks).rev() {
        let mut rem = bl;
        let beta: Vec<usize> = block_counts
            .iter()
            .map(|&n| {
                let digit = rem % n;
                rem /= n;
                digit
            })
            .collect();
        let starts: Vec<usize> = (0..d).map(|k| layouts[k][beta[k]].0).collect();
        let widths: Vec<usize> = (0..d).map(|k| layouts[k][beta[k]].1).collect();
        let local: Vec<Vec<usize>> = index_iter(&widths).collect();
        let bsize = local.len();
        let mut sys = DenseMatrix::zeros(bsize, bsize);
        let mut rhs_loc = vec![T::zero(); bsize];
        let lstrides: Vec<usize> = {
            let mut s = vec![1usize; d];
            for k in 1..d {
                s[k] = s[k - 1] * widths[k - 1];
            }
            s
        };
        for (p, off) in local.iter().enumerate() {
            let g_lin: usize = (0..d).map(|k| (starts[k] + off[k]) * strides[k]).sum();
            let mut val = rhs.data()[g_lin];
            for k in 0..d {
                let row = starts[k] + off[k];
                for q in starts[k] + widths[k]..shape[k] {
                    let t = ts[k][(row, q)];
                    if t != T::zero() {
                        val -= t * x.data()[g_lin + (q - row) * strides[k]];
                    }
                }
                for c in 0..widths[k] {
                    let p2 = p + c * lstrides[k] - off[k] * lstrides[k];
                    sys[(p, p2)] += ts[k][(row, starts[k] + c)];
                }
            }
            rhs_loc[p] = val;
        }
        let sol = match LuFactors::factor(&sys) {
            Ok(lu) => lu.solve_vec(&rhs_loc),
            // Cancelled projected spectra: same minimum-norm fallback as the
            // dense route, applied to the small composite block.
            Err(_) => svd_min_norm_solve(&sys, &rhs_loc)?,
        };
        for (p, off) in local.iter().enumerate() {
            let g_lin: usize = (0..d).map(|k| (starts[k] + off[k]) * strides[k]).sum();
            x.data_mut()[g_lin] = sol[p];
        }
    }
    Ok(x)
}

/// Frobenius norm of `Σ_i X ×_i A_i − B`, evaluated entirely in factored
/// form: per mode, the factors of all d+1 terms are concatenated and
/// orthogonalized by thin QR; the norm is taken on the combined small core.
pub fn tensor_residual_norm<T: Scalar>(
    ops: &[CoefficientOperator<T>],
    b: &TuckerTensor<T>,
    x: &TuckerTensor<T>,
) -> T {
    let d = ops.len();
    assert_eq!(b.ndim(), d, "dimension mismatch");
    assert_eq!(x.ndim(), d, "dimension mismatch");
    let xr = x.ranks();
    let br = b.ranks();
    let mut r_factors = Vec::with_capacity(d);
    for i in 0..d {
        let au = ops[i].apply(&x.factors[i]);
        let stacked = DenseMatrix::hstack(&[&x.factors[i], &au, &b.factors[i]]);
        r_factors.push(qr_thin(&stacked).r);
    }
    let big_shape: Vec<usize> = (0..d).map(|i| 2 * xr[i] + br[i]).collect();
    let mut big = DenseTensor::zeros(&big_shape).expect("positive extents");
    for term in 0..d {
        for idx in index_iter(x.core.shape()) {
            let shifted: Vec<usize> = idx
                .iter()
                .enumerate()
                .map(|(i, &v)| if i == term { v + xr[i] } else { v })
                .collect();
            *big.at_mut(&shifted) = x.core.at(&idx);
        }
    }
    for idx in index_iter(b.core.shape()) {
        let shifted: Vec<usize> = idx
            .iter()
            .enumerate()
            .map(|(i, &v)| v + 2 * xr[i])
            .collect();
        *big.at_mut(&shifted) = -b.core.at(&idx);
    }
    let mut reduced = big;
    for (i, r) in r_factors.iter().enumerate() {
        reduced = reduced
            .mode_product(r, i)
            .expect("triangular factor widths match by construction");
    }
    reduced.fro_norm()
}

/// Sequential per-mode SVD truncation of the core with threshold `theta`;
/// factors are rotated by the retained singular directions.
pub fn hosvd_truncate<T: Scalar>(x: &TuckerTensor<T>, theta: T) -> Result<TuckerTensor<T>> {
    hosvd_truncate_capped(x, theta, usize::MAX)
}

/// [`hosvd_truncate`] with a hard per-mode rank cap; `theta = 0` with a
/// finite cap truncates to an exact multilinear rank.
pub fn hosvd_truncate_capped<T: Scalar>(
    x: &TuckerTensor<T>,
    theta: T,
    max_rank: usize,
) -> Result<TuckerTensor<T>> {
    let mut core = x.core.clone();
    let mut factors = x.factors.clone();
    for k in 0..x.ndim() {
        let f = svd(&core.matricize(k))?;
        let keep = truncate_rank(&f.sigma, theta).min(max_rank.max(1));
        let p = f.u.leading_cols(keep);
        core = core.mode_product(&p.transpose(), k)?;
        factors[k] = factors[k].matmul(&p);
    }
    TuckerTensor::new(core, factors)
}

fn check_rhs_shape<T: Scalar>(ops: &[CoefficientOperator<T>], b: &TuckerTensor<T>) -> Result<()> {
    if b.ndim() != ops.len() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} modes but {} operators given",
            b.ndim(),
            ops.len()
        )));
    }
    for (k, op) in ops.iter().enumerate() {
        if b.factors[k].rows() != op.dim() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side mode {} has size {} but operator dim is {}",
                k,
                b.factors[k].rows(),
                op.dim()
            )));
        }
    }
    Ok(())
}

fn validate_tensor_problem<T: Scalar>(
    ops: &[CoefficientOperator<T>],
    b: &TuckerTensor<T>,
    config: &BugConfig<T>,
) -> Result<()> {
    if ops.len() < 2 {
        return Err(Error::InvalidArgument(
            "tensor drivers need at least two modes".into(),
        ));
    }
    check_rhs_shape(ops, b)?;
    let min_dim = ops.iter().map(|op| op.dim()).min().unwrap_or(0);
    if config.rank == 0 || config.rank > min_dim {
        return Err(Error::InvalidArgument(format!(
            "rank {} out of range for smallest mode size {}",
            config.rank, min_dim
        )));
    }
    if config.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be positive".into()));
    }
    if config.max_rank == Some(0) {
        return Err(Error::InvalidArgument("max_rank must be positive".into()));
    }
    Ok(())
}

fn pencil_from_singular(e: Error) -> Error {
    match e {
        Error::Singular(_) => Error::SingularProjectedPencil,
        other => other,
    }
}

/// Solve `Σ_i X ×_i A_i = B` at a fixed uniform multilinear rank
/// `config.rank`. Every iteration updates all mode bases from the previous
/// iterate (a parallel sweep), then solves the projected core on the new
/// bases. The `s_step_every_iteration` and `gauss_seidel_coupling` flags
/// apply to the matrix drivers only and are ignored here.
pub fn tensor_fixed_rank_solve<T: Scalar>(
    ops: &[CoefficientOperator<T>],
    b: &TuckerTensor<T>,
    config: &BugConfig<T>,
    initial: Option<&TuckerTensor<T>>,
) -> Result<(TuckerTensor<T>, ConvergenceTrace<T>)> {
    validate_tensor_problem(ops, b, config)?;
    let dims: Vec<usize> = ops.iter().map(|op| op.dim()).collect();
    if let Some(x0) = initial {
        if x0.dims() != dims {
            return Err(Error::DimensionMismatch(
                "initial iterate does not match the operators".into(),
            ));
        }
    }
    let ranks = vec![config.rank; ops.len()];
    let mut rng = SeededRng::new(config.seed);
    for attempt in 0..=SINGULAR_PENCIL_RETRIES {
        let start = match (attempt, initial) {
            (0, Some(x0)) => x0.clone(),
            _ => TuckerTensor::random(&dims, &ranks, &mut rng)?,
        };
        match run_fixed(ops, b, config, start) {
            Err(Error::SingularProjectedPencil) if attempt < SINGULAR_PENCIL_RETRIES => continue,
            other => return other,
        }
    }
    unreachable!("retry loop always returns");
}

fn run_fixed<T: Scalar>(
    ops: &[CoefficientOperator<T>],
    b: &TuckerTensor<T>,
    config: &BugConfig<T>,
    start: TuckerTensor<T>,
) -> Result<(TuckerTensor<T>, ConvergenceTrace<T>)> {
    let entries: usize = ops.iter().map(|op| op.dim()).product();
    let scale = entry_count_scale::<T>(entries);
    let mut x = start;
    let mut prev_err = initial_prev_err::<T>();
    let mut records = Vec::new();
    for iter in 1..=config.max_iter {
        let mut new_factors = Vec::with_capacity(ops.len());
        for k in 0..ops.len() {
            let update = tucker_k_step(ops, b, &x, k).map_err(pencil_from_singular)?;
            new_factors.push(orth(&update)?);
        }
        let core = core_step(ops, b, &new_factors).map_err(pencil_from_singular)?;
        x = TuckerTensor::new(core, new_factors)?;
        let residual = tensor_residual_norm(ops, b, &x);
        let residual_scaled = residual / scale;
        records.push(TraceRecord {
            iter,
            residual,
            residual_scaled,
            ranks: x.ranks(),
            theta: None,
        });
        let curr_err = if config.stop_on_scaled {
            residual_scaled
        } else {
            residual
        };
        if let Some(termination) =
            stopping_decision(curr_err, prev_err, config.tol, iter, config.max_iter)
        {
            return Ok((x, ConvergenceTrace { records, termination }));
        }
        prev_err = curr_err;
    }
    unreachable!("stopping decision fires at max_iter");
}

/// Rank-adaptive tensor solve: each iteration augments every mode basis
/// with its subspace update, solves the projected core at the enlarged
/// ranks, then truncates by HOSVD against `config.theta`. Starts from
/// uniform rank `config.rank` (or `initial`); `config.max_rank` caps
/// per-mode growth.
pub fn tensor_adaptive_solve<T: Scalar>(
    ops: &[CoefficientOperator<T>],
    b: &TuckerTensor<T>,
    config: &BugConfig<T>,
    initial: Option<&TuckerTensor<T>>,
) -> Result<(TuckerTensor<T>, ConvergenceTrace<T>)> {
    validate_tensor_problem(ops, b, config)?;
    let dims: Vec<usize> = ops.iter().map(|op| op.dim()).collect();
    if let Some(x0) = initial {
        if x0.dims() != dims {
            return Err(Error::DimensionMismatch(
                "initial iterate does not match the operators".into(),
            ));
        }
    }
    let ranks = vec![config.rank; ops.len()];
    let mut rng = SeededRng::new(config.seed);
    for attempt in 0..=SINGULAR_PENCIL_RETRIES {
        let start = match (attempt, initial) {
            (0, Some(x0)) => x0.clone(),
            _ => TuckerTensor::random(&dims, &ranks, &mut rng)?,
        };
        match run_adaptive(ops, b, config, start) {
            Err(Error::SingularProjectedPencil) if attempt < SINGULAR_PENCIL_RETRIES => continue,
            other => return other,
        }
    }
    unreachable!("retry loop always returns");
}

fn run_adaptive<T: Scalar>(
    ops: &[CoefficientOperator<T>],
    b: &TuckerTensor<T>,
    config: &BugConfig<T>,
    start: TuckerTensor<T>,
) -> Result<(TuckerTensor<T>, ConvergenceTrace<T>)> {
    let entries: usize = ops.iter().map(|op| op.dim()).product();
    let scale = entry_count_scale::<T>(entries);
    let rank_cap = config.max_rank.unwrap_or(usize::MAX);
    let mut x = start;
    let mut prev_err = initial_prev_err::<T>();
    let mut records = Vec::new();
    let mut frozen_base: Option<T> = None;
    for iter in 1..=config.max_iter {
        let ranks = x.ranks();
        let mut augmented = Vec::with_capacity(ops.len());
        for k in 0..ops.len() {
            let update = tucker_k_step(ops, b, &x, k).map_err(pencil_from_singular)?;
            let width = (2 * ranks[k]).min(ops[k].dim());
            augmented.push(orth_limited(
                &DenseMatrix::hstack(&[&update, &x.factors[k]]),
                width,
            ));
        }
        let core_hat = core_step(ops, b, &augmented).map_err(pencil_from_singular)?;
        let base_norm = core_hat.fro_norm();
        let theta = match config.theta {
            ThetaRule::Absolute(t) => t,
            ThetaRule::RelativeToCurrent(frac) => frac * base_norm,
            ThetaRule::RelativeFrozen(frac) => frac * *frozen_base.get_or_insert(base_norm),
        };
        x = hosvd_truncate_capped(&TuckerTensor::new(core_hat, augmented)?, theta, rank_cap)?;
        let residual = tensor_residual_norm(ops, b, &x);
        let residual_scaled = residual / scale;
        records.push(TraceRecord {
            iter,
            residual,
            residual_scaled,
            ranks: x.ranks(),
            theta: Some(theta),
        });
        let curr_err = if config.stop_on_scaled {
            residual_scaled
        } else {
            residual
        };
        if let Some(termination) =
            stopping_decision(curr_err, prev_err, config.tol, iter, config.max_iter)
        {
            return Ok((x, ConvergenceTrace { records, termination }));
        }
        prev_err = curr_err;
    }
    unreachable!("stopping decision fires at max_iter");
}
