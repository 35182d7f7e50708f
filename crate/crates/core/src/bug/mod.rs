//! Low-rank solvers for the matrix equation `A X + X Bᵀ = C`: an alternating
//! basis-update-and-Galerkin iteration, in a fixed-rank variant and a
//! rank-adaptive variant with augmented bases and singular-value truncation.

mod adaptive;
mod fixed;
pub mod steps;

pub use adaptive::adaptive_solve;
pub use fixed::fixed_rank_solve;
pub use steps::{k_step, l_step, s_step, truncate_rank};

pub(crate) use fixed::SINGULAR_PENCIL_RETRIES;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kernels::qr::orth;
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Factored matrix `X = U S Vᵀ` with `U` (`m x r`) and `V` (`n x r`) holding
/// orthonormal columns and a small square core `S` (`r x r`, not necessarily
/// diagonal).
#[derive(Debug, Clone)]
pub struct LowRankMatrix<T> {
    pub u: DenseMatrix<T>,
    pub s: DenseMatrix<T>,
    pub v: DenseMatrix<T>,
}

impl<T: Scalar> LowRankMatrix<T> {
    pub fn new(u: DenseMatrix<T>, s: DenseMatrix<T>, v: DenseMatrix<T>) -> Result<Self> {
        if !s.is_square() || u.cols() != s.rows() || v.cols() != s.rows() {
            return Err(Error::DimensionMismatch(format!(
                "low-rank factors: U {}x{}, S {}x{}, V {}x{}",
                u.rows(),
                u.cols(),
                s.rows(),
                s.cols(),
                v.rows(),
                v.cols()
            )));
        }
        Ok(Self { u, s, v })
    }

    pub fn nrows(&self) -> usize {
        self.u.rows()
    }

    pub fn ncols(&self) -> usize {
        self.v.rows()
    }

    pub fn rank(&self) -> usize {
        self.s.rows()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.u.matmul(&self.s).mul_t(&self.v)
    }

    /// Frobenius norm, using that the outer factors are orthonormal.
    pub fn fro_norm(&self) -> T {
        self.s.fro_norm()
    }

    /// Random orthonormal bases with an identity core; the starting iterate
    /// of the solvers (only the bases matter — the first basis-update pass
    /// never reads the core).
    pub fn random_bases(m: usize, n: usize, r: usize, rng: &mut SeededRng) -> Result<Self> {
        if r == 0 || r > m.min(n) {
            return Err(Error::InvalidArgument(format!(
                "rank {r} out of range for {m}x{n}"
            )));
        }
        let u = orth(&rng.normal_matrix(m, r))?;
        let v = orth(&rng.normal_matrix(n, r))?;
        Self::new(u, DenseMatrix::identity(r), v)
    }

    /// Random orthonormal bases around a random dense core: a generic
    /// factored matrix for tests and experiment inputs.
    pub fn random_with_core(m: usize, n: usize, r: usize, rng: &mut SeededRng) -> Result<Self> {
        let mut out = Self::random_bases(m, n, r, rng)?;
        out.s = rng.normal_matrix(r, r);
        Ok(out)
    }

    /// Best rank-`r` approximation of a dense matrix via SVD.
    pub fn from_dense_svd(x: &DenseMatrix<T>, r: usize) -> Result<Self> {
        if r == 0 || r > x.rows().min(x.cols()) {
            return Err(Error::InvalidArgument(format!(
                "rank {r} out of range for {}x{}",
                x.rows(),
                x.cols()
            )));
        }
        let f = crate::kernels::svd::svd(x)?;
        let u = f.u.leading_cols(r);
        let v = f.v.leading_cols(r);
        let mut s = DenseMatrix::zeros(r, r);
        for i in 0..r {
            s[(i, i)] = f.sigma[i];
        }
        Self::new(u, s, v)
    }
}

/// Truncation threshold rule for the rank-adaptive solvers.
#[derive(Debug, Clone, Copy)]
pub enum ThetaRule<T> {
    /// Fixed threshold.
    Absolute(T),
    /// `factor * ||Ŝ||_F` of the current augmented core, recomputed every
    /// iteration.
    RelativeToCurrent(T),
    /// `factor * ||Ŝ||_F` of the first iteration's augmented core, then kept
    /// fixed.
    RelativeFrozen(T),
}

/// Solver configuration shared by the matrix drivers (the tensor drivers
/// reuse it; fields that only affect one variant say so).
#[derive(Debug, Clone)]
pub struct BugConfig<T> {
    /// Fixed rank, or the starting rank of the adaptive variants.
    pub rank: usize,
    /// Stopping tolerance on the residual and on residual stagnation.
    pub tol: T,
    pub max_iter: usize,
    /// Truncation threshold rule (adaptive variants only).
    pub theta: ThetaRule<T>,
    /// Fixed-rank variant: when false, the Galerkin core solve is skipped
    /// (the core is rotated onto the new bases instead) until the bases have
    /// stopped drifting by more than `tol`.
    pub s_step_every_iteration: bool,
    /// Fixed-rank variant: feed the freshly updated row basis into the
    /// column-basis update instead of the previous one.
    pub gauss_seidel_coupling: bool,
    /// Compare the dimension-scaled residual against `tol` instead of the
    /// plain Frobenius residual.
    pub stop_on_scaled: bool,
    /// Seed for random starting bases and singular-pencil retries.
    pub seed: u64,
    /// Adaptive variants: hard rank cap (defaults to the ambient limit).
    pub max_rank: Option<usize>,
}

impl<T: Scalar> BugConfig<T> {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            tol: T::of(1e-8),
            max_iter: 100,
            theta: ThetaRule::RelativeToCurrent(T::of(1e-10)),
            s_step_every_iteration: true,
            gauss_seidel_coupling: false,
            stop_on_scaled: false,
            seed: 0,
            max_rank: None,
        }
    }
}

/// Why an iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Residual dropped to the tolerance.
    ResidualBelowTol,
    /// Successive residuals differed by no more than the tolerance.
    Stagnation,
    /// Iteration budget exhausted.
    MaxIter,
}

/// Per-iteration convergence record.
#[derive(Debug, Clone)]
pub struct TraceRecord<T> {
    pub iter: usize,
    /// Frobenius residual of the equation.
    pub residual: T,
    /// Residual divided by the square root of the entry count.
    pub residual_scaled: T,
    /// Rank after this iteration (one entry per mode for tensors).
    pub ranks: Vec<usize>,
    /// Truncation threshold used this iteration (adaptive only).
    pub theta: Option<T>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTrace<T> {
    pub records: Vec<TraceRecord<T>>,
    pub termination: Termination,
}

impl<T: Scalar> ConvergenceTrace<T> {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_residual(&self) -> Option<T> {
        self.records.last().map(|r| r.residual)
    }

    pub fn final_scaled_residual(&self) -> Option<T> {
        self.records.last().map(|r| r.residual_scaled)
    }
}

/// Residual sentinel: "no previous iteration" for the stagnation test.
pub(crate) fn initial_prev_err<T: Scalar>() -> T {
    T::of(1e10)
}

/// Shared stopping decision: returns `Some` when the iteration should stop.
pub(crate) fn stopping_decision<T: Scalar>(
    curr_err: T,
    prev_err: T,
    tol: T,
    iter: usize,
    max_iter: usize,
) -> Option<Termination> {
    if curr_err <= tol {
        Some(Termination::ResidualBelowTol)
    } else if (curr_err - prev_err).abs() <= tol {
        Some(Termination::Stagnation)
    } else if iter >= max_iter {
        Some(Termination::MaxIter)
    } else {
        None
    }
}
