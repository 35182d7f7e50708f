//! Rank-adaptive driver: augment each basis with the latest subspace update,
//! solve the Galerkin core on the enlarged bases, then truncate by singular
//! values against a threshold rule.

use crate::bug::fixed::{validate_problem, SINGULAR_PENCIL_RETRIES};
use crate::bug::steps::{k_step, l_step, s_step, truncate_rank};
use crate::bug::{
    initial_prev_err, stopping_decision, BugConfig, ConvergenceTrace, LowRankMatrix, ThetaRule,
    TraceRecord,
};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kernels::norms::{entry_count_scale, low_rank_residual_norm};
use crate::kernels::qr::orth_limited;
use crate::operators::CoefficientOperator;
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Solve `A X + X Bᵀ = C` with the rank adjusted every iteration.
///
/// Each pass doubles the basis ranks by appending the subspace-update
/// directions, solves the projected core on the doubled bases, and keeps
/// only the singular directions that survive `config.theta`. The starting
/// rank is `config.rank` (or the rank of `initial`); `config.max_rank`
/// caps growth.
pub fn adaptive_solve<T: Scalar>(
    op_a: &CoefficientOperator<T>,
    op_b: &CoefficientOperator<T>,
    c: &LowRankMatrix<T>,
    config: &BugConfig<T>,
    initial: Option<&LowRankMatrix<T>>,
) -> Result<(LowRankMatrix<T>, ConvergenceTrace<T>)> {
    validate_problem(op_a, op_b, c, config)?;
    let (m, n) = (c.nrows(), c.ncols());
    if let Some(y0) = initial {
        if y0.nrows() != m || y0.ncols() != n {
            return Err(Error::DimensionMismatch(
                "initial iterate does not match the problem".into(),
            ));
        }
        if y0.rank() == 0 || y0.rank() > m.min(n) {
            return Err(Error::InvalidArgument(
                "initial iterate rank out of range".into(),
            ));
        }
    }
    let mut rng = SeededRng::new(config.seed);
    for attempt in 0..=SINGULAR_PENCIL_RETRIES {
        let start = match (attempt, initial) {
            (0, Some(y0)) => y0.clone(),
            _ => LowRankMatrix::random_bases(m, n, config.rank, &mut rng)?,
        };
        match run(op_a, op_b, c, config, start) {
            Err(Error::SingularProjectedPencil) if attempt < SINGULAR_PENCIL_RETRIES => continue,
            other => return other,
        }
    }
    unreachable!("retry loop always returns");
}

fn run<T: Scalar>(
    op_a: &CoefficientOperator<T>,
    op_b: &CoefficientOperator<T>,
    c: &LowRankMatrix<T>,
    config: &BugConfig<T>,
    start: LowRankMatrix<T>,
) -> Result<(LowRankMatrix<T>, ConvergenceTrace<T>)> {
    let (m, n) = (c.nrows(), c.ncols());
    let scale = entry_count_scale::<T>(m * n);
    let rank_cap = config.max_rank.unwrap_or(usize::MAX).min(m.min(n));
    // Only the bases carry over between iterations; every iteration rebuilds
    // the core from scratch, so the starting core is never read.
    let (mut u, mut v) = (start.u, start.v);
    let mut prev_err = initial_prev_err::<T>();
    let mut records = Vec::new();
    let mut frozen_base: Option<T> = None;

    for iter in 1..=config.max_iter {
        let r = u.cols();
        let width = (2 * r).min(m).min(n);

        let k = k_step(op_a, op_b, c, &v)?;
        let u_hat = orth_limited(&DenseMatrix::hstack(&[&k, &u]), width);
        let l = l_step(op_a, op_b, c, &u)?;
        let v_hat = orth_limited(&DenseMatrix::hstack(&[&l, &v]), width);

        let s_hat = s_step(op_a, op_b, c, &u_hat, &v_hat)?;
        let f = crate::kernels::svd(&s_hat)?;
        let base_norm = f
            .sigma
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt();
        let theta = match config.theta {
            ThetaRule::Absolute(t) => t,
            ThetaRule::RelativeToCurrent(frac) => frac * base_norm,
            ThetaRule::RelativeFrozen(frac) => frac * *frozen_base.get_or_insert(base_norm),
        };
        let r_new = truncate_rank(&f.sigma, theta).min(rank_cap);

        u = u_hat.matmul(&f.u.leading_cols(r_new));
        v = v_hat.matmul(&f.v.leading_cols(r_new));
        let s = DenseMatrix::from_fn(r_new, r_new, |i, j| {
            if i == j {
                f.sigma[i]
            } else {
                T::zero()
            }
        });

        let y = LowRankMatrix::new(u.clone(), s, v.clone())?;
        let residual = low_rank_residual_norm(op_a, op_b, &y, c);
        let residual_scaled = residual / scale;
        records.push(TraceRecord {
            iter,
            residual,
            residual_scaled,
            ranks: vec![r_new],
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
            return Ok((y, ConvergenceTrace { records, termination }));
        }
        prev_err = curr_err;
    }
    unreachable!("stopping decision fires at max_iter");
}
