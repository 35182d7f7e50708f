//! Brute-force reference solver: vectorize the Sylvester equation into one
//! dense linear system and solve it by LU. Exponentially sized, so capped, but
//! bit-deterministic and independent of every structured code path — the
//! cross-check oracle for the real solvers.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Maximum number of unknowns (`m * n`) the vectorization oracle accepts.
pub const KRON_ORACLE_CAP: usize = 4096;

/// Dense LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    lu: DenseMatrix<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> LuFactors<T> {
    /// Factor a square matrix; fails on (numerically) singular input.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let tol = T::epsilon() * T::of_usize(n.max(1)) * a.max_abs();
        let mut lu = a.clone();
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tol {
                return Err(Error::Singular(format!("zero pivot at column {k}")));
            }
            lu.swap_rows(k, p);
            piv.push(p);
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                let (top, bot) = lu.data_mut().split_at_mut(i * n);
                let krow = &top[k * n..k * n + n];
                let irow = &mut bot[..n];
                for j in k + 1..n {
                    irow[j] -= l * krow[j];
                }
            }
        }
        Ok(Self { lu, piv })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        assert_eq!(b.len(), n, "LU solve: rhs length");
        for (k, &p) in self.piv.iter().enumerate() {
            b.swap(k, p);
        }
        // Unit lower triangle, then upper triangle.
        for i in 1..n {
            let row = self.lu.row(i);
            let mut s = b[i];
            for (j, &l) in row.iter().enumerate().take(i) {
                s -= l * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = b[i];
            for j in i + 1..n {
                s -= row[j] * b[j];
            }
            b[i] = s / row[i];
        }
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solve for every column of `b`.
    pub fn solve_matrix(&self, b: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(b.rows(), self.dim(), "LU solve: rhs rows");
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            out.set_col(j, &self.solve_vec(&b.col(j)));
        }
        out
    }
}

/// Kronecker product `a ⊗ b`: entry `((ia, ja) block) * b`.
pub fn kron<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> DenseMatrix<T> {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = DenseMatrix::zeros(ar * br, ac * bc);
    for ia in 0..ar {
        for ja in 0..ac {
            let s = a[(ia, ja)];
            for ib in 0..br {
                for jb in 0..bc {
                    out[(ia * br + ib, ja * bc + jb)] = s * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Column-stacked vectorization: `v[i + m*j] = x[i, j]`.
pub fn vec_col_stacked<T: Scalar>(x: &DenseMatrix<T>) -> Vec<T> {
    let (m, n) = (x.rows(), x.cols());
    let mut v = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            v.push(x[(i, j)]);
        }
    }
    v
}

/// Inverse of [`vec_col_stacked`].
pub fn unvec_col_stacked<T: Scalar>(v: &[T], m: usize, n: usize) -> DenseMatrix<T> {
    assert_eq!(v.len(), m * n, "unvec: length");
    DenseMatrix::from_fn(m, n, |i, j| v[i + m * j])
}

/// Solve `A X + X Bᵀ = C` by brute force: form `I ⊗ A + B ⊗ I` and LU-solve
/// the vectorized system. Only valid for `m * n <= KRON_ORACLE_CAP`.
///
/// Fails with [`Error::Singular`] when the spectra of `A` and `-B` intersect
/// numerically, and with [`Error::CapExceeded`] above the size cap.
pub fn solve_sylvester_kron_oracle<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if !a.is_square() || !b.is_square() || c.rows() != a.rows() || c.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "oracle: A {}x{}, B {}x{}, C {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            c.rows(),
            c.cols()
        )));
    }
    let (m, n) = (a.rows(), b.rows());
    if m * n > KRON_ORACLE_CAP {
        return Err(Error::CapExceeded(format!(
            "oracle limited to {KRON_ORACLE_CAP} unknowns, got {}",
            m * n
        )));
    }
    let mut sys = kron(&DenseMatrix::identity(n), a);
    let bi = kron(b, &DenseMatrix::identity(m));
    sys = sys.add(&bi);
    let lu = LuFactors::factor(&sys)?;
    let x = lu.solve_vec(&vec_col_stacked(c));
    Ok(unvec_col_stacked(&x, m, n))
}
