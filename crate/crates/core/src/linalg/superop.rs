use num_complex::Complex;

use super::density::DensityMatrix;
use super::hermitian::HermitianOperator;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::num::{cis, czero, Real};

/// Linear map on `d x d` matrices.
///
/// Stored as the `d^2 x d^2` matrix acting on vectorized states, with the
/// state index `a = j * d + k` for the entry `rho[(j, k)]` (the row-major
/// flattening). The tensor entry `S^{jk}_{j'k'}`, input pair `(j, k)` and output
/// pair `(j', k')`, sits at row `j' * d + k'`, column `j * d + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator<T: Real> {
    dim: usize,
    matrix: ComplexMatrix<T>,
}

impl<T: Real> Superoperator<T> {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix<T>) -> Result<Self> {
        if matrix.dim() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.dim(),
            });
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite("superoperator"));
        }
        Ok(Self { dim, matrix })
    }

    /// Builds from `f(j, k, j', k') = S^{jk}_{j'k'}`.
    pub fn from_tensor_fn(
        dim: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> Complex<T>,
    ) -> Self {
        let matrix = ComplexMatrix::from_fn(dim * dim, |out, inp| {
            f(inp / dim, inp % dim, out / dim, out % dim)
        });
        Self { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::identity(dim * dim),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// `S^{jk}_{j'k'}`
    #[inline]
    pub fn tensor(&self, j: usize, k: usize, jp: usize, kp: usize) -> Complex<T> {
        let d = self.dim;
        self.matrix[(jp * d + kp, j * d + k)]
    }

    /// `rho'_{j'k'} = sum_{jk} S^{jk}_{j'k'} rho_{jk}`, evaluated on the tensor view.
    /// No normalization or hermitization is applied.
    pub fn apply(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        self.check_state(rho)?;
        let d = self.dim;
        Ok(ComplexMatrix::from_fn(d, |jp, kp| {
            let mut acc = czero();
            for j in 0..d {
                for k in 0..d {
                    acc = acc + self.tensor(j, k, jp, kp) * rho[(j, k)];
                }
            }
            acc
        }))
    }

    /// Same action through the `d^2 x d^2` matrix on the vectorized state.
    pub fn apply_vectorized(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        self.check_state(rho)?;
        let out = self.matrix.mul_vec(rho.as_slice())?;
        ComplexMatrix::from_row_major(self.dim, out)
    }

    /// `self` after `first`.
    pub fn after(&self, first: &Self) -> Result<Self> {
        compose(self, first)
    }

    /// `S^{jk}_{j'k'} <- (S^{jk}_{j'k'} + conj(S^{kj}_{k'j'})) / 2`
    pub fn hermiticity_symmetrized(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_tensor_fn(self.dim, |j, k, jp, kp| {
            (self.tensor(j, k, jp, kp) + self.tensor(k, j, kp, jp).conj()) * half
        })
    }

    /// `max |S^{jk}_{j'k'} - conj(S^{kj}_{k'j'})|`; zero iff the map preserves Hermiticity.
    pub fn hermiticity_defect(&self) -> T {
        let d = self.dim;
        let mut defect = T::zero();
        for j in 0..d {
            for k in 0..d {
                for jp in 0..d {
                    for kp in 0..d {
                        let z = self.tensor(j, k, jp, kp) - self.tensor(k, j, kp, jp).conj();
                        defect = defect.max(z.norm());
                    }
                }
            }
        }
        defect
    }

    /// `max_{j,k} |sum_{j'} S^{jk}_{j'j'} - delta_{jk}|`
    pub fn trace_defect(&self) -> T {
        let d = self.dim;
        let mut defect = T::zero();
        for j in 0..d {
            for k in 0..d {
                let s: Complex<T> = (0..d).fold(czero(), |acc, jp| acc + self.tensor(j, k, jp, jp));
                let target = if j == k { T::one() } else { T::zero() };
                defect = defect.max((s - Complex::new(target, T::zero())).norm());
            }
        }
        defect
    }

    /// Trace defect restricted to the population columns `j == k`.
    pub fn population_trace_defect(&self) -> T {
        let d = self.dim;
        (0..d)
            .map(|j| {
                let s: T = (0..d).map(|jp| self.tensor(j, j, jp, jp).re).sum();
                (s - T::one()).abs()
            })
            .fold(T::zero(), T::max)
    }

    fn check_state(&self, rho: &ComplexMatrix<T>) -> Result<()> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        Ok(())
    }
}

pub fn apply_superop<T: Real>(s: &Superoperator<T>, rho: &DensityMatrix<T>) -> Result<ComplexMatrix<T>> {
    s.apply(rho.matrix())
}

/// `second` after `first`.
pub fn compose<T: Real>(second: &Superoperator<T>, first: &Superoperator<T>) -> Result<Superoperator<T>> {
    if second.dim != first.dim {
        return Err(Error::DimensionMismatch {
            expected: second.dim,
            found: first.dim,
        });
    }
    Ok(Superoperator {
        dim: first.dim,
        matrix: second.matrix.matmul(&first.matrix)?,
    })
}

/// Free evolution over `tau` in the energy eigenbasis:
/// `S^{jk}_{j'k'} = delta_{jj'} delta_{kk'} exp(-i (e_j - e_k) tau / hbar)`.
pub fn unitary_superop<T: Real>(energies: &[T], tau: T, hbar: T) -> Result<Superoperator<T>> {
    if tau < T::zero() {
        return Err(Error::InvalidParameter(format!("negative evolution time {tau}")));
    }
    if !(hbar > T::zero()) {
        return Err(Error::InvalidParameter("hbar must be positive".into()));
    }
    let d = energies.len();
    let phases: Vec<Complex<T>> = (0..d * d)
        .map(|a| cis(-(energies[a / d] - energies[a % d]) * tau / hbar))
        .collect();
    Ok(Superoperator {
        dim: d,
        matrix: ComplexMatrix::diagonal(&phases),
    })
}

/// Choi matrix `C = sum_{jk} |j><k| (x) S(|j><k|)`, entry
/// `C[(j d + j', k d + k')] = S^{jk}_{j'k'}`. Returned as its Hermitian part;
/// the map is completely positive iff this matrix is positive semidefinite.
pub fn choi_matrix<T: Real>(s: &Superoperator<T>) -> HermitianOperator<T> {
    let d = s.dim;
    let c = ComplexMatrix::from_fn(d * d, |row, col| {
        s.tensor(row / d, col / d, row % d, col % d)
    });
    HermitianOperator::hermitian_part_of(&c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dephasing(d: usize) -> Superoperator<f64> {
        Superoperator::from_tensor_fn(d, |j, k, jp, kp| {
            if j == jp && k == kp && j == k {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
    }

    fn sample_state() -> ComplexMatrix<f64> {
        ComplexMatrix::from_rows(&[
            vec![Complex::new(0.3, 0.0), Complex::new(0.1, 0.2)],
            vec![Complex::new(0.1, -0.2), Complex::new(0.7, 0.0)],
        ])
        .unwrap()
    }

    #[test]
    fn identity_leaves_state() {
        let rho = sample_state();
        assert_eq!(Superoperator::identity(2).apply(&rho).unwrap(), rho);
    }

    #[test]
    fn dephasing_keeps_diagonal() {
        let out = dephasing(2).apply(&sample_state()).unwrap();
        assert_eq!(out[(0, 1)], Complex::new(0.0, 0.0));
        assert_eq!(out[(1, 1)], Complex::new(0.7, 0.0));
    }

    #[test]
    fn free_evolution_half_period_flips_coherence() {
        // Delta = 0.6, tau = pi / 0.6
        let u = unitary_superop(&[-0.3, 0.3], std::f64::consts::PI / 0.6, 1.0).unwrap();
        let rho = sample_state();
        let out = u.apply(&rho).unwrap();
        assert!((out[(0, 1)] + rho[(0, 1)]).norm() < 1e-15);
        assert_eq!(out[(0, 0)], rho[(0, 0)]);
    }

    #[test]
    fn unitary_at_zero_time_is_identity() {
        let u = unitary_superop(&[-0.3, 0.3, 1.0], 0.0, 1.0).unwrap();
        assert_eq!(u, Superoperator::identity(3));
        assert!(unitary_superop(&[0.0, 1.0], -1.0, 1.0).is_err());
    }

    #[test]
    fn compose_with_identity() {
        let s = dephasing(2);
        assert_eq!(compose(&s, &Superoperator::identity(2)).unwrap(), s);
        assert!(compose(&s, &Superoperator::identity(3)).is_err());
    }

    #[test]
    fn dimension_mismatch_on_apply() {
        assert!(Superoperator::<f64>::identity(3).apply(&sample_state()).is_err());
    }

    #[test]
    fn choi_of_identity() {
        let e = choi_matrix(&Superoperator::<f64>::identity(2)).eig();
        let expected = [0.0, 0.0, 0.0, 2.0];
        for (a, b) in e.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn choi_of_dephasing() {
        let c = choi_matrix(&dephasing(2));
        // diagonal with entries (1, 0, 0, 1)
        let m = c.matrix();
        for r in 0..4 {
            for col in 0..4 {
                let expected = if r == col && (r == 0 || r == 3) { 1.0 } else { 0.0 };
                assert_eq!(m[(r, col)], Complex::new(expected, 0.0));
            }
        }
    }

    #[test]
    fn choi_of_unitary_is_rank_one() {
        let u = unitary_superop::<f64>(&[-0.3, 0.1, 0.45], 1.7, 1.0).unwrap();
        let e = choi_matrix(&u).eig();
        assert!((e.max() - 3.0).abs() < 1e-13);
        assert!(e.values[..8].iter().all(|v| v.abs() < 1e-13));
    }
}
