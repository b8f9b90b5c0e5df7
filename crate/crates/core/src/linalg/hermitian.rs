use num_complex::Complex;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::num::Real;

/// Absolute Hermiticity defect tolerated (after scaling by `max(1, |H|_max)`)
/// before construction is refused.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

/// Complex matrix with `H[(j, k)] == conj(H[(k, j)])` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> HermitianOperator<T> {
    /// Symmetrizes `(M + M^dagger) / 2`; fails if `M` was not Hermitian to within tolerance.
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::NonFinite("Hermitian operator"));
        }
        let defect = matrix.hermiticity_defect();
        let scale = matrix.max_abs().max(T::one());
        if defect > T::tol(HERMITICITY_TOLERANCE) * scale {
            return Err(Error::NotHermitian {
                defect: defect.as_f64(),
            });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    /// Hermitian part of an arbitrary matrix, without a defect check.
    pub fn hermitian_part_of(matrix: &ComplexMatrix<T>) -> Self {
        Self {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn from_real_diagonal(values: &[T]) -> Self {
        Self {
            matrix: ComplexMatrix::real_diagonal(values),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.matrix.check_dim(&other.matrix)?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn eig(&self) -> HermitianEigen<T> {
        eig_hermitian(self)
    }

    /// `U f(Lambda) U^dagger`; fails if `f` is non-finite on any eigenvalue.
    pub fn matrix_function(&self, f: impl Fn(T) -> Complex<T>) -> Result<ComplexMatrix<T>> {
        self.eig().apply(f)
    }
}

/// Spectral decomposition `H = U diag(values) U^dagger`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// Eigenvectors as columns.
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn apply(&self, f: impl Fn(T) -> Complex<T>) -> Result<ComplexMatrix<T>> {
        let fv: Vec<Complex<T>> = self.values.iter().map(|&l| f(l)).collect();
        if fv.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("matrix function value"));
        }
        let n = self.values.len();
        let u = &self.vectors;
        Ok(ComplexMatrix::from_fn(n, |r, c| {
            (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + u[(r, k)] * fv[k] * u[(c, k)].conj()
            })
        }))
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.apply(|l| Complex::new(l, T::zero()))
            .expect("finite eigenvalues")
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        *self.values.last().expect("non-empty spectrum")
    }
}

/// Cyclic complex Jacobi eigensolver.
pub fn eig_hermitian<T: Real>(h: &HermitianOperator<T>) -> HermitianEigen<T> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = ComplexMatrix::<T>::identity(n);
    let zero = Complex::new(T::zero(), T::zero());

    let scale = a.max_abs();
    if n > 1 && scale > T::zero() {
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
                .map(|(r, c)| a[(r, c)].norm_sqr())
                .sum();
            if off.sqrt() <= eps * eps.sqrt() * scale {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let r = apq.norm();
                    if r <= T::min_positive_value() || r <= eps * eps * scale {
                        a[(p, q)] = zero;
                        a[(q, p)] = zero;
                        continue;
                    }
                    let phase = apq / r;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let theta = (aqq - app) / (T::lit(2.0) * r);
                    let t = if theta.is_infinite() {
                        T::zero()
                    } else {
                        let sgn = if theta >= T::zero() { T::one() } else { -T::one() };
                        sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    // Columns p, q of J = diag(1, conj(phase)) * [[c, s], [-s, c]].
                    let jpp = Complex::new(c, T::zero());
                    let jpq = Complex::new(s, T::zero());
                    let jqp = phase.conj() * (-s);
                    let jqq = phase.conj() * c;

                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * jpp + akq * jqp;
                        a[(k, q)] = akp * jpq + akq * jqq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                    }
                    a[(p, q)] = zero;
                    a[(q, p)] = zero;
                    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
                    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());

                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * jpp + vkq * jqp;
                        v[(k, q)] = vkp * jpq + vkq * jqq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    HermitianEigen { values, vectors }
}
