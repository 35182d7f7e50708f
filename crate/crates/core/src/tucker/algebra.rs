//! Dense multiway arrays, matricization, mode products, and the Tucker
//! format (small core plus one orthonormal factor per mode).

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Dense d-way array. Entries are stored with the first index fastest:
/// the linear position of `(i_1, …, i_d)` is `i_1 + I_1·(i_2 + I_2·(i_3 + …))`.
/// Every reshape in this module derives from that single layout rule.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

/// Iterates multi-indices of a shape in linear-storage order
/// (first index fastest).
pub(crate) struct MultiIndexIter {
    shape: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for MultiIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.clone()?;
        let mut bumped = current.clone();
        let mut done = true;
        for (digit, &extent) in bumped.iter_mut().zip(self.shape.iter()) {
            *digit += 1;
            if *digit < extent {
                done = false;
                break;
            }
            *digit = 0;
        }
        self.next = if done { None } else { Some(bumped) };
        Some(current)
    }
}

pub(crate) fn index_iter(shape: &[usize]) -> MultiIndexIter {
    let next = if shape.iter().any(|&e| e == 0) {
        None
    } else {
        Some(vec![0; shape.len().max(1)])
    };
    MultiIndexIter {
        shape: if shape.is_empty() { vec![1] } else { shape.to_vec() },
        next,
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::InvalidArgument("tensor needs at least one mode".into()));
    }
    if shape.iter().any(|&e| e == 0) {
        return Err(Error::InvalidArgument("tensor extents must be positive".into()));
    }
    Ok(())
}

impl<T: Scalar> DenseTensor<T> {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        let len = shape.iter().product();
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); len],
        })
    }

    /// Builds from entries already in linear-storage order.
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        check_shape(shape)?;
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "shape {:?} needs {} entries, got {}",
                shape,
                len,
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        check_shape(shape)?;
        let mut data = Vec::with_capacity(shape.iter().product());
        for idx in index_iter(shape) {
            data.push(f(&idx));
        }
        Self::from_vec(shape, data)
    }

    pub fn random_normal(shape: &[usize], rng: &mut SeededRng) -> Result<Self> {
        check_shape(shape)?;
        let len: usize = shape.iter().product();
        Self::from_vec(shape, (0..len).map(|_| rng.normal()).collect())
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &extent) in idx.iter().zip(self.shape.iter()) {
            debug_assert!(i < extent);
            lin += i * stride;
            stride *= extent;
        }
        lin
    }

    pub fn at(&self, idx: &[usize]) -> T {
        self.data[self.linear_index(idx)]
    }

    pub fn at_mut(&mut self, idx: &[usize]) -> &mut T {
        let lin = self.linear_index(idx);
        &mut self.data[lin]
    }

    pub fn fro_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| x * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Flattens mode `k` into rows: result is `I_k × Π_{j≠k} I_j`, columns
    /// ordered over the remaining modes with the earliest mode fastest
    /// (the same rule as the linear storage order).
    pub fn matricize(&self, k: usize) -> DenseMatrix<T> {
        assert!(k < self.ndim(), "mode out of range");
        let extent = self.shape[k];
        let rest: usize = self.len() / extent;
        let stride_k: usize = self.shape[..k].iter().product();
        let mut out = DenseMatrix::zeros(extent, rest);
        for (lin, &value) in self.data.iter().enumerate() {
            let low = lin % stride_k.max(1);
            let row = (lin / stride_k.max(1)) % extent;
            let high = lin / (stride_k.max(1) * extent);
            out[(row, low + high * stride_k.max(1))] = value;
        }
        out
    }

    /// Exact inverse of `matricize`: rebuilds the tensor of `shape` from its
    /// mode-`k` flattening.
    pub fn tensorize(mat: &DenseMatrix<T>, k: usize, shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        if k >= shape.len() {
            return Err(Error::InvalidArgument(format!(
                "mode {} out of range for {:?}",
                k, shape
            )));
        }
        let extent = shape[k];
        let total: usize = shape.iter().product();
        let rest = total / extent;
        if mat.rows() != extent || mat.cols() != rest {
            return Err(Error::DimensionMismatch(format!(
                "matrix {}x{} cannot fill mode {} of {:?}",
                mat.rows(),
                mat.cols(),
                k,
                shape
            )));
        }
        let stride_k: usize = shape[..k].iter().product::<usize>().max(1);
        let mut data = vec![T::zero(); total];
        for row in 0..extent {
            for col in 0..rest {
                let low = col % stride_k;
                let high = col / stride_k;
                data[low + stride_k * (row + extent * high)] = mat[(row, col)];
            }
        }
        Self::from_vec(shape, data)
    }

    /// Linear-storage-order vectorization (the canonical flattening that all
    /// Kronecker assemblies in this module are ordered against).
    pub fn mode0_vec(&self) -> Vec<T> {
        self.data.clone()
    }

    pub fn from_mode0_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        Self::from_vec(shape, data)
    }

    /// Contracts `m` (`J × I_k`) against mode `k`: the result replaces the
    /// mode-`k` extent by `J`.
    pub fn mode_product(&self, m: &DenseMatrix<T>, k: usize) -> Result<Self> {
        if k >= self.ndim() {
            return Err(Error::InvalidArgument(format!(
                "mode {} out of range for {:?}",
                k, self.shape
            )));
        }
        if m.cols() != self.shape[k] {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns but mode {} extent is {}",
                m.cols(),
                k,
                self.shape[k]
            )));
        }
        let flat = m.matmul(&self.matricize(k));
        let mut new_shape = self.shape.clone();
        new_shape[k] = m.rows();
        Self::tensorize(&flat, k, &new_shape)
    }
}

/// Tucker-format tensor: a small core contracted with one
/// orthonormal-column factor per mode.
#[derive(Debug, Clone)]
pub struct TuckerTensor<T> {
    pub core: DenseTensor<T>,
    pub factors: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> TuckerTensor<T> {
    /// Validates shapes: factor `k` must be `n_k × r_k` with `r_k ≤ n_k`
    /// and `r_k` equal to the core's mode-`k` extent. Orthonormality of the
    /// factors is the caller's contract, as with low-rank matrix factors.
    pub fn new(core: DenseTensor<T>, factors: Vec<DenseMatrix<T>>) -> Result<Self> {
        if factors.len() != core.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors for a {}-mode core",
                factors.len(),
                core.ndim()
            )));
        }
        for (k, f) in factors.iter().enumerate() {
            if f.cols() != core.shape()[k] {
                return Err(Error::DimensionMismatch(format!(
                    "factor {} has {} columns but core extent is {}",
                    k,
                    f.cols(),
                    core.shape()[k]
                )));
            }
            if f.rows() < f.cols() {
                return Err(Error::InvalidArgument(format!(
                    "factor {} is {}x{}; rank cannot exceed the mode size",
                    k,
                    f.rows(),
                    f.cols()
                )));
            }
        }
        Ok(Self { core, factors })
    }

    /// Random orthonormal factors around a random normal core.
    pub fn random(shape: &[usize], ranks: &[usize], rng: &mut SeededRng) -> Result<Self> {
        if shape.len() != ranks.len() {
            return Err(Error::DimensionMismatch(
                "shape and rank lists differ in length".into(),
            ));
        }
        let mut factors = Vec::with_capacity(shape.len());
        for (&n, &r) in shape.iter().zip(ranks.iter()) {
            if r == 0 || r > n {
                return Err(Error::InvalidArgument(format!(
                    "rank {} out of range for mode size {}",
                    r, n
                )));
            }
            factors.push(crate::kernels::orth(&rng.normal_matrix(n, r))?);
        }
        let core = DenseTensor::random_normal(ranks, rng)?;
        Self::new(core, factors)
    }

    pub fn ndim(&self) -> usize {
        self.core.ndim()
    }

    /// Mode sizes of the represented (full) tensor.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    /// Per-mode core extents.
    pub fn ranks(&self) -> Vec<usize> {
        self.core.shape().to_vec()
    }

    /// Materializes the represented tensor by successive mode products.
    pub fn to_dense(&self) -> DenseTensor<T> {
        let mut out = self.core.clone();
        for (k, f) in self.factors.iter().enumerate() {
            out = out
                .mode_product(f, k)
                .expect("validated factor shapes always contract");
        }
        out
    }

    /// Frobenius norm of the represented tensor, valid under the
    /// orthonormal-factor contract: it equals the core norm.
    pub fn fro_norm(&self) -> T {
        self.core.fro_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor_123() -> DenseTensor<f64> {
        // shape (2,3,2): entry value encodes its multi-index.
        DenseTensor::from_fn(&[2, 3, 2], |idx| {
            1.0 + idx[0] as f64 + 10.0 * idx[1] as f64 + 100.0 * idx[2] as f64
        })
        .unwrap()
    }

    #[test]
    fn linear_layout_first_index_fastest() {
        let t = tensor_123();
        assert_eq!(t.data()[0], t.at(&[0, 0, 0]));
        assert_eq!(t.data()[1], t.at(&[1, 0, 0]));
        assert_eq!(t.data()[2], t.at(&[0, 1, 0]));
        assert_eq!(t.data()[6], t.at(&[0, 0, 1]));
    }

    #[test]
    fn matricize_matches_direct_enumeration() {
        let t = tensor_123();
        for k in 0..3 {
            let m = t.matricize(k);
            assert_eq!(m.rows(), t.shape()[k]);
            assert_eq!(m.cols(), t.len() / t.shape()[k]);
            // Brute-force check: column index accumulates remaining modes
            // with the earliest remaining mode fastest.
            for idx in index_iter(t.shape()) {
                let mut col = 0;
                let mut stride = 1;
                for (j, &i) in idx.iter().enumerate() {
                    if j == k {
                        continue;
                    }
                    col += i * stride;
                    stride *= t.shape()[j];
                }
                assert_eq!(m[(idx[k], col)], t.at(&idx));
            }
        }
    }

    #[test]
    fn matrix_case_matricizations() {
        let t = DenseTensor::from_fn(&[3, 4], |idx| (idx[0] * 4 + idx[1]) as f64).unwrap();
        let m0 = t.matricize(0);
        let m1 = t.matricize(1);
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(m0[(i, j)], t.at(&[i, j]));
                assert_eq!(m1[(j, i)], t.at(&[i, j]));
            }
        }
    }

    #[test]
    fn tensorize_round_trip_all_modes() {
        let mut rng = SeededRng::new(7);
        let t = DenseTensor::<f64>::random_normal(&[3, 4, 5], &mut rng).unwrap();
        for k in 0..3 {
            let back = DenseTensor::tensorize(&t.matricize(k), k, t.shape()).unwrap();
            assert_eq!(back, t, "round trip is bit-exact");
        }
    }

    #[test]
    fn mode0_vec_round_trip() {
        let t = tensor_123();
        let v = t.mode0_vec();
        let back = DenseTensor::from_mode0_vec(t.shape(), v).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn mode_product_identity_and_summation() {
        let t = tensor_123();
        let id = DenseMatrix::identity(3);
        assert_eq!(t.mode_product(&id, 1).unwrap(), t);

        let ones = DenseMatrix::from_rows(1, 3, &[1.0, 1.0, 1.0]);
        let summed = t.mode_product(&ones, 1).unwrap();
        assert_eq!(summed.shape(), &[2, 1, 2]);
        for i in 0..2 {
            for l in 0..2 {
                let direct: f64 = (0..3).map(|j| t.at(&[i, j, l])).sum();
                assert!((summed.at(&[i, 0, l]) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mode_product_matches_elementwise_definition() {
        let mut rng = SeededRng::new(11);
        let t = DenseTensor::<f64>::random_normal(&[2, 3, 4], &mut rng).unwrap();
        let m = rng.normal_matrix::<f64>(5, 3);
        let p = t.mode_product(&m, 1).unwrap();
        assert_eq!(p.shape(), &[2, 5, 4]);
        for idx in index_iter(p.shape()) {
            let mut direct = 0.0;
            for j in 0..3 {
                direct += m[(idx[1], j)] * t.at(&[idx[0], j, idx[2]]);
            }
            assert!((p.at(&idx) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn tucker_to_dense_matches_matrix_triple_product() {
        let mut rng = SeededRng::new(13);
        let x = TuckerTensor::<f64>::random(&[6, 5], &[3, 2], &mut rng).unwrap();
        let dense = x.to_dense().matricize(0);
        let s = x.core.matricize(0);
        let direct = x.factors[0].matmul(&s).mul_t(&x.factors[1]);
        assert!(dense.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn tucker_norm_equals_core_norm() {
        let mut rng = SeededRng::new(17);
        let x = TuckerTensor::<f64>::random(&[7, 6, 5], &[2, 3, 2], &mut rng).unwrap();
        let dense_norm = x.to_dense().fro_norm();
        assert!((x.fro_norm() - dense_norm).abs() < 1e-10 * dense_norm);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DenseTensor::<f64>::zeros(&[]).is_err());
        assert!(DenseTensor::<f64>::zeros(&[2, 0]).is_err());
        assert!(DenseTensor::<f64>::from_vec(&[2, 2], vec![0.0; 3]).is_err());
        let mut rng = SeededRng::new(1);
        assert!(TuckerTensor::<f64>::random(&[3, 3], &[4, 1], &mut rng).is_err());
    }
}
