//! Dense linear-algebra kernels, written from scratch so their numerical
//! behaviour is fully pinned: LU, Householder QR, Golub–Kahan SVD, real Schur,
//! and the Bartels–Stewart Sylvester solver, plus a brute-force Kronecker
//! vectorization oracle for cross-checking.

pub mod norms;
pub mod oracle;
pub mod qr;
pub mod schur;
pub mod svd;
pub mod sylvester;

pub use norms::{low_rank_residual_norm, scaled_fro_norm};
pub use oracle::{kron, solve_sylvester_kron_oracle, LuFactors, KRON_ORACLE_CAP};
pub use qr::{orth, qr_thin, QrFactors};
pub use schur::{real_schur, SchurFactors};
pub use svd::{svd, SvdFactors};
pub use sylvester::{solve_sylvester_dense, solve_sylvester_dense_min_norm, solve_sylvester_schur};
