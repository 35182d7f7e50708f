//! Brute-force reference solver for the multiway coefficient equation
//! `Σ_i X ×_i G_i = R` via explicit Kronecker assembly over the
//! linear-storage vectorization. Intended for small cross-checks; the cap
//! keeps it honest.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kernels::oracle::{kron, LuFactors};
use crate::scalar::Scalar;
use crate::tucker::algebra::DenseTensor;

/// Hard ceiling on the vectorized unknown count.
pub const TENSOR_ORACLE_CAP: usize = 4096;

/// Builds `I ⊗ … ⊗ G (slot k) ⊗ … ⊗ I` over the given per-mode extents,
/// ordered to act on linear-storage vectorizations: the first mode is the
/// fastest index, so its operand sits innermost in the Kronecker chain.
pub fn kron_slot_matrix<T: Scalar>(
    extents: &[usize],
    slot: usize,
    g: &DenseMatrix<T>,
) -> DenseMatrix<T> {
    assert!(slot < extents.len(), "slot out of range");
    assert_eq!(g.cols(), extents[slot], "operand width must match its mode");
    let mut acc = if slot == 0 {
        g.clone()
    } else {
        DenseMatrix::identity(extents[0])
    };
    for (j, &extent) in extents.iter().enumerate().skip(1) {
        let next = if j == slot {
            g.clone()
        } else {
            DenseMatrix::identity(extent)
        };
        acc = kron(&next, &acc);
    }
    acc
}

/// Solves `Σ_i X ×_i coeffs[i] = rhs` by assembling the Kronecker-sum
/// system on the vectorized unknown and eliminating densely. Deterministic
/// for fixed input.
pub fn solve_tensor_kron_oracle<T: Scalar>(
    coeffs: &[DenseMatrix<T>],
    rhs: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    if coeffs.len() != rhs.ndim() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficient matrices for a {}-mode right-hand side",
            coeffs.len(),
            rhs.ndim()
        )));
    }
    for (i, g) in coeffs.iter().enumerate() {
        if !g.is_square() || g.rows() != rhs.shape()[i] {
            return Err(Error::DimensionMismatch(format!(
                "coefficient {} is {}x{} but mode extent is {}",
                i,
                g.rows(),
                g.cols(),
                rhs.shape()[i]
            )));
        }
    }
    let total = rhs.len();
    if total > TENSOR_ORACLE_CAP {
        return Err(Error::CapExceeded(format!(
            "{} unknowns exceed the oracle cap {}",
            total, TENSOR_ORACLE_CAP
        )));
    }
    let mut sys = DenseMatrix::zeros(total, total);
    for (i, g) in coeffs.iter().enumerate() {
        sys = sys.add(&kron_slot_matrix(rhs.shape(), i, g));
    }
    let lu = LuFactors::factor(&sys)?;
    let x = lu.solve_vec(&rhs.mode0_vec());
    DenseTensor::from_mode0_vec(rhs.shape(), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::oracle::solve_sylvester_kron_oracle;
    use crate::rng::SeededRng;
    use crate::tucker::algebra::index_iter;

    fn apply_all_modes<T: Scalar>(x: &DenseTensor<T>, coeffs: &[DenseMatrix<T>]) -> DenseTensor<T> {
        let mut acc = DenseTensor::zeros(x.shape()).unwrap();
        for (i, g) in coeffs.iter().enumerate() {
            let term = x.mode_product(g, i).unwrap();
            for (a, &t) in acc.data_mut().iter_mut().zip(term.data().iter()) {
                *a += t;
            }
        }
        acc
    }

    #[test]
    fn single_mode_is_a_plain_linear_solve() {
        let mut rng = SeededRng::new(21);
        let g = rng
            .normal_matrix::<f64>(5, 5)
            .add(&DenseMatrix::identity(5).scale(4.0));
        let rhs = DenseTensor::random_normal(&[5], &mut rng).unwrap();
        let x = solve_tensor_kron_oracle(&[g.clone()], &rhs).unwrap();
        let lu = LuFactors::factor(&g).unwrap();
        let direct = lu.solve_vec(rhs.data());
        for (a, b) in x.data().iter().zip(direct.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_coefficients_decouple_entrywise() {
        let mut rng = SeededRng::new(22);
        let shape = [3, 4, 2];
        let diags: Vec<Vec<f64>> = shape
            .iter()
            .map(|&n| (0..n).map(|_| 1.0 + rng.uniform::<f64>()).collect())
            .collect();
        let coeffs: Vec<DenseMatrix<f64>> = diags
            .iter()
            .map(|d| {
                DenseMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
            })
            .collect();
        let rhs = DenseTensor::random_normal(&shape, &mut rng).unwrap();
        let x = solve_tensor_kron_oracle(&coeffs, &rhs).unwrap();
        for idx in index_iter(&shape) {
            let denom: f64 = idx.iter().zip(diags.iter()).map(|(&i, d)| d[i]).sum();
            assert!((x.at(&idx) - rhs.at(&idx) / denom).abs() < 1e-12);
        }
    }

    #[test]
    fn kron_assembly_matches_mode_products() {
        // The definitive ordering check: sys · vec(X) must equal the
        // vectorization of Σ_i X ×_i G_i for the slot order used here.
        let mut rng = SeededRng::new(23);
        let shape = [2, 3, 4];
        let coeffs: Vec<DenseMatrix<f64>> =
            shape.iter().map(|&n| rng.normal_matrix(n, n)).collect();
        let x = DenseTensor::random_normal(&shape, &mut rng).unwrap();
        let mut sys = DenseMatrix::zeros(24, 24);
        for (i, g) in coeffs.iter().enumerate() {
            sys = sys.add(&kron_slot_matrix(&shape, i, g));
        }
        let direct = apply_all_modes(&x, &coeffs);
        let vec_x = x.mode0_vec();
        for (row, &want) in direct.data().iter().enumerate() {
            let got: f64 = (0..24).map(|c| sys[(row, c)] * vec_x[c]).sum();
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn two_mode_case_matches_matrix_oracle() {
        let mut rng = SeededRng::new(24);
        let a = rng
            .normal_matrix::<f64>(4, 4)
            .add(&DenseMatrix::identity(4).scale(5.0));
        let b = rng
            .normal_matrix::<f64>(3, 3)
            .add(&DenseMatrix::identity(3).scale(5.0));
        let rhs = DenseTensor::random_normal(&[4, 3], &mut rng).unwrap();
        let x_tensor = solve_tensor_kron_oracle(&[a.clone(), b.clone()], &rhs).unwrap();
        let x_matrix = solve_sylvester_kron_oracle(&a, &b, &rhs.matricize(0)).unwrap();
        assert!(x_tensor.matricize(0).max_abs_diff(&x_matrix) < 1e-11);
    }

    #[test]
    fn solution_satisfies_the_equation() {
        let mut rng = SeededRng::new(25);
        let shape = [3, 4, 5];
        let coeffs: Vec<DenseMatrix<f64>> = shape
            .iter()
            .map(|&n| {
                rng.normal_matrix::<f64>(n, n)
                    .add(&DenseMatrix::identity(n).scale(6.0))
            })
            .collect();
        let rhs = DenseTensor::random_normal(&shape, &mut rng).unwrap();
        let x = solve_tensor_kron_oracle(&coeffs, &rhs).unwrap();
        let back = apply_all_modes(&x, &coeffs);
        assert!(back.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn matricization_identity_pins_the_kron_order() {
        // Mat_i(C ×_j U_j …) = U_i · Mat_i(C) · (⊗_{j≠i} U_j)ᵀ with the
        // remaining modes' operands chained so the earliest mode is
        // innermost; this is the identity the reduction layer depends on.
        let mut rng = SeededRng::new(26);
        let core = DenseTensor::<f64>::random_normal(&[2, 3, 4], &mut rng).unwrap();
        let factors: Vec<DenseMatrix<f64>> = [(5, 2), (6, 3), (7, 4)]
            .iter()
            .map(|&(n, r)| rng.normal_matrix(n, r))
            .collect();
        let mut full = core.clone();
        for (j, u) in factors.iter().enumerate() {
            full = full.mode_product(u, j).unwrap();
        }
        for i in 0..3 {
            let lhs = full.matricize(i);
            let mut chain: Option<DenseMatrix<f64>> = None;
            for (j, u) in factors.iter().enumerate() {
                if j == i {
                    continue;
                }
                chain = Some(match chain {
                    None => u.clone(),
                    Some(acc) => kron(u, &acc),
                });
            }
            let rhs = factors[i]
                .matmul(&core.matricize(i))
                .mul_t(&chain.unwrap());
            assert!(lhs.max_abs_diff(&rhs) < 1e-12, "mode {} identity", i);
        }
    }

    #[test]
    fn cap_and_dimension_errors() {
        let mut rng = SeededRng::new(27);
        let big = DenseTensor::<f64>::random_normal(&[17, 16, 16], &mut rng).unwrap();
        let coeffs: Vec<DenseMatrix<f64>> = [17, 16, 16]
            .iter()
            .map(|&n| DenseMatrix::identity(n))
            .collect();
        assert!(matches!(
            solve_tensor_kron_oracle(&coeffs, &big),
            Err(Error::CapExceeded(_))
        ));
        let rhs = DenseTensor::<f64>::random_normal(&[3, 3], &mut rng).unwrap();
        assert!(solve_tensor_kron_oracle(&coeffs[..1], &rhs).is_err());
    }
}
