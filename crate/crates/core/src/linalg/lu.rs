use num_complex::Complex;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::num::Real;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T: Real> {
    lu: ComplexMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn factor(a: &ComplexMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let tiny = scale * T::epsilon() * T::from_usize_lossy(n.max(1));
        for k in 0..n {
            let (piv, pval) = (k..n)
                .map(|r| (r, lu[(r, k)].norm()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pval > tiny) || scale == T::zero() {
                return Err(Error::Singular(format!(
                    "zero pivot in column {k} of {n}x{n} system"
                )));
            }
            if piv != k {
                perm.swap(piv, k);
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(piv, c)];
                    lu[(piv, c)] = tmp;
                }
            }
            let d = lu[(k, k)];
            for r in k + 1..n {
                let f = lu[(r, k)] / d;
                lu[(r, k)] = f;
                if f.norm() == T::zero() {
                    continue;
                }
                for c in k + 1..n {
                    let u = lu[(k, c)];
                    lu[(r, c)] = lu[(r, c)] - f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.lu.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for c in 0..r {
                let l = self.lu[(r, c)];
                let xc = x[c];
                x[r] = x[r] - l * xc;
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                let u = self.lu[(r, c)];
                let xc = x[c];
                x[r] = x[r] - u * xc;
            }
            x[r] = x[r] / self.lu[(r, r)];
        }
        if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Singular("non-finite solution".into()));
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<ComplexMatrix<T>> {
        let n = self.lu.dim();
        let mut inv = ComplexMatrix::zeros(n);
        let mut e = vec![Complex::new(T::zero(), T::zero()); n];
        for c in 0..n {
            e.iter_mut().for_each(|z| *z = Complex::new(T::zero(), T::zero()));
            e[c] = Complex::new(T::one(), T::zero());
            let col = self.solve(&e)?;
            for r in 0..n {
                inv[(r, c)] = col[r];
            }
        }
        Ok(inv)
    }
}

/// Solves `A x = b`.
pub fn solve<T: Real>(a: &ComplexMatrix<T>, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    Lu::factor(a)?.solve(b)
}

/// 1-norm condition number `|A|_1 |A^-1|_1`.
pub fn condition_one<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    let inv = Lu::factor(a)?.inverse()?;
    Ok(a.norm_one() * inv.norm_one())
}
