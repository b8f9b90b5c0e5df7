use num_complex::Complex;

use super::hermitian::HermitianOperator;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::num::Real;

pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const POSITIVITY_TOLERANCE: f64 = 1e-10;

/// Unit-trace positive Hermitian state in the system energy eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    op: HermitianOperator<T>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(op: HermitianOperator<T>) -> Result<Self> {
        let tr = op.matrix().trace();
        if (tr.re - T::one()).abs() > T::tol(TRACE_TOLERANCE) {
            return Err(Error::InvalidState(format!("trace {} differs from 1", tr.re)));
        }
        let min = op.eig().min();
        if min < -T::tol(POSITIVITY_TOLERANCE) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
        }
        Ok(Self { op })
    }

    pub fn from_matrix(m: ComplexMatrix<T>) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(p: &[T]) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter("empty population vector".into()));
        }
        Self::new(HermitianOperator::from_real_diagonal(p))
    }

    /// `|j><j|`
    pub fn basis_state(dim: usize, j: usize) -> Result<Self> {
        if j >= dim {
            return Err(Error::InvalidParameter(format!("level {j} outside dimension {dim}")));
        }
        let mut p = vec![T::zero(); dim];
        p[j] = T::one();
        Self::from_populations(&p)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = vec![T::one() / T::from_usize_lossy(dim); dim];
        Self {
            op: HermitianOperator::from_real_diagonal(&p),
        }
    }

    /// Wraps the Hermitian part of a state produced by evolution. Trace and
    /// positivity are whatever the generating map delivered; they are not
    /// re-validated here.
    pub fn from_evolved(m: &ComplexMatrix<T>) -> Self {
        Self {
            op: HermitianOperator::hermitian_part_of(m),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        self.op.matrix()
    }

    #[inline]
    pub fn operator(&self) -> &HermitianOperator<T> {
        &self.op
    }

    #[inline]
    pub fn entry(&self, j: usize, k: usize) -> Complex<T> {
        self.op.matrix()[(j, k)]
    }

    pub fn trace(&self) -> T {
        self.op.matrix().trace().re
    }

    pub fn populations(&self) -> Vec<T> {
        (0..self.dim()).map(|j| self.entry(j, j).re).collect()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.op.eig().min()
    }

    pub fn renormalized(&self) -> Self {
        let tr = self.trace();
        Self {
            op: HermitianOperator::hermitian_part_of(&self.matrix().scale_real(T::one() / tr)),
        }
    }

    /// Max-norm distance to another state.
    pub fn distance(&self, other: &Self) -> Result<T> {
        self.matrix().max_abs_diff(other.matrix())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_trace() {
        assert!(matches!(
            DensityMatrix::<f64>::from_populations(&[0.5, 0.6]),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        assert!(DensityMatrix::<f64>::from_populations(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn accepts_pure_state_with_coherence() {
        let h = 0.5;
        let m = ComplexMatrix::<f64>::from_fn(2, |_, _| Complex::new(h, 0.0));
        let rho = DensityMatrix::from_matrix(m).unwrap();
        assert!(rho.min_eigenvalue().abs() < 1e-15);
    }
}
