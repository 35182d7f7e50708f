//! Tucker-format tensors and solvers for the tensor equation
//! `Σ_i X ×_i A_i = B`: dense tensor algebra (matricization, mode
//! products), reduced per-mode coupling matrices, basis-update and core
//! solves, HOSVD truncation, and the fixed-rank / rank-adaptive drivers.

pub mod algebra;
pub mod oracle;
pub mod reduction;
pub mod solver;

pub use algebra::{DenseTensor, TuckerTensor};
pub use oracle::{kron_slot_matrix, solve_tensor_kron_oracle, TENSOR_ORACLE_CAP};
pub use reduction::ModeReduction;
pub use solver::{
    core_step, hosvd_truncate, hosvd_truncate_capped, tensor_adaptive_solve,
    tensor_fixed_rank_solve,
    tensor_residual_norm, tucker_k_step, CORE_UNKNOWNS_CAP,
};
