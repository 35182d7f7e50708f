//! Per-mode reduction data for the tensor basis-update steps: orthonormal
//! factors of the transposed core matricization plus the projected
//! coefficient matrices, and the projected couplings built from them
//! without ever materializing a Kronecker product.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kernels::qr::qr_thin;
use crate::operators::CoefficientOperator;
use crate::scalar::Scalar;
use crate::tucker::algebra::{DenseTensor, TuckerTensor};

/// Reduction of one mode `k` of a Tucker iterate:
/// `Mat_k(core)ᵀ = q · sᵀ` with orthonormal `q`, plus
/// `projected[j] = U_jᵀ A_jᵀ U_j` for every mode `j`.
pub struct ModeReduction<T> {
    pub mode: usize,
    pub q: DenseMatrix<T>,
    pub s: DenseMatrix<T>,
    pub projected: Vec<DenseMatrix<T>>,
    /// Core extents of the modes other than `mode`, in ascending mode order;
    /// the column index of `Mat_mode` runs over exactly this shape.
    reduced_shape: Vec<usize>,
}

impl<T: Scalar> ModeReduction<T> {
    pub fn new(
        ops: &[CoefficientOperator<T>],
        x: &TuckerTensor<T>,
        mode: usize,
    ) -> Result<Self> {
        if ops.len() != x.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "{} operators for a {}-mode iterate",
                ops.len(),
                x.ndim()
            )));
        }
        if mode >= x.ndim() {
            return Err(Error::InvalidArgument(format!(
                "mode {} out of range for {} modes",
                mode,
                x.ndim()
            )));
        }
        for (j, op) in ops.iter().enumerate() {
            if op.dim() != x.factors[j].rows() {
                return Err(Error::DimensionMismatch(format!(
                    "operator {} has dim {} but factor has {} rows",
                    j,
                    op.dim(),
                    x.factors[j].rows()
                )));
            }
        }
        let ranks = x.ranks();
        let rank = ranks[mode];
        let co_rank: usize = ranks
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != mode)
            .map(|(_, &r)| r)
            .product();
        if co_rank < rank {
            return Err(Error::InvalidArgument(format!(
                "mode {}: rank {} exceeds the product {} of the other ranks",
                mode, rank, co_rank
            )));
        }
        let flat = x.core.matricize(mode);
        let qf = qr_thin(&flat.transpose());
        let projected = ops
            .iter()
            .zip(x.factors.iter())
            .map(|(op, u)| op.apply(u).t_mul(u))
            .collect();
        let reduced_shape = ranks
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != mode)
            .map(|(_, &r)| r)
            .collect();
        Ok(Self {
            mode,
            q: qf.q,
            s: qf.r.transpose(),
            projected,
            reduced_shape,
        })
    }

    /// Position of mode `j` within the reduced (mode-deleted) shape.
    fn reduced_pos(&self, j: usize) -> usize {
        if j < self.mode {
            j
        } else {
            j - 1
        }
    }

    /// The projected coupling for mode `j ≠ mode`: conjugates the
    /// identity-padded coefficient `projected[j]` by `q`. Each column of `q`
    /// is reshaped over the reduced shape and contracted against
    /// `projected[j]` in mode `j`'s slot — no Kronecker matrix is formed.
    pub fn build_p(&self, j: usize) -> Result<DenseMatrix<T>> {
        if j == self.mode || j >= self.projected.len() {
            return Err(Error::InvalidArgument(format!(
                "coupling mode {} invalid for reduction of mode {}",
                j, self.mode
            )));
        }
        let pos = self.reduced_pos(j);
        let mut applied = DenseMatrix::zeros(self.q.rows(), self.q.cols());
        for c in 0..self.q.cols() {
            let column = DenseTensor::from_vec(&self.reduced_shape, self.q.col(c))?;
            let product = column.mode_product(&self.projected[j], pos)?;
            applied.set_col(c, product.data());
        }
        Ok(self.q.t_mul(&applied))
    }

    pub fn reduced_shape(&self) -> &[usize] {
        &self.reduced_shape
    }
}

/// Applies `⊗ mats` (one operand per reduced mode, ascending, earliest mode
/// innermost) to every column of `cols`, where each column is the
/// linear-order vectorization of a tensor of shape `in_shape`. The operands
/// may be rectangular; the output column length is the product of their row
/// counts.
pub(crate) fn apply_kron_to_columns<T: Scalar>(
    mats: &[&DenseMatrix<T>],
    in_shape: &[usize],
    cols: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if mats.len() != in_shape.len() {
        return Err(Error::DimensionMismatch(
            "one operand per mode is required".into(),
        ));
    }
    let out_len: usize = mats.iter().map(|m| m.rows()).product();
    let mut out = DenseMatrix::zeros(out_len, cols.cols());
    for c in 0..cols.cols() {
        let mut t = DenseTensor::from_vec(in_shape, cols.col(c))?;
        for (pos, m) in mats.iter().enumerate() {
            t = t.mode_product(m, pos)?;
        }
        out.set_col(c, t.data());
    }
    Ok(out)
}
