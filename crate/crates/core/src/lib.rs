//! Low-rank solvers for Sylvester-type matrix and tensor equations.
//!
//! The crate provides three layers:
//!
//! * **kernels** — dense factorizations written from scratch (Householder QR,
//!   Golub–Kahan SVD, real Schur, Bartels–Stewart) plus a Kronecker
//!   vectorization oracle used to cross-check everything else;
//! * **operators** — a unified coefficient-operator type (dense, tridiagonal,
//!   CSR) with cached shifted solves, and the mixed large-by-small Sylvester
//!   solver built on it;
//! * **bug / tucker** — the low-rank solver drivers: fixed-rank and
//!   rank-adaptive basis-update-and-Galerkin iterations for matrices, and
//!   their Tucker-format extension for tensors.
//!
//! Everything is generic over the scalar type via [`Scalar`]; the aliases at
//! the crate root pin the two supported precisions.

pub mod bug;
pub mod dense;
mod error;
pub mod io;
pub mod kernels;
pub mod operators;
pub mod rng;
pub mod scalar;
pub mod tucker;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use rng::SeededRng;
pub use scalar::Scalar;

pub use bug::{
    adaptive_solve, fixed_rank_solve, BugConfig, ConvergenceTrace, LowRankMatrix, Termination,
    ThetaRule, TraceRecord,
};
pub use operators::{CoefficientOperator, CsrMatrix};
pub use tucker::{tensor_adaptive_solve, tensor_fixed_rank_solve, DenseTensor, TuckerTensor};

/// Single-precision aliases.
pub type DenseMatrixF32 = DenseMatrix<f32>;
pub type LowRankMatrixF32 = LowRankMatrix<f32>;
pub type CoefficientOperatorF32 = CoefficientOperator<f32>;
pub type DenseTensorF32 = DenseTensor<f32>;
pub type TuckerTensorF32 = TuckerTensor<f32>;

/// Double-precision aliases.
pub type DenseMatrixF64 = DenseMatrix<f64>;
pub type LowRankMatrixF64 = LowRankMatrix<f64>;
pub type CoefficientOperatorF64 = CoefficientOperator<f64>;
pub type DenseTensorF64 = DenseTensor<f64>;
pub type TuckerTensorF64 = TuckerTensor<f64>;
