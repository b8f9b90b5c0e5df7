use super::matrix::ComplexMatrix;
use crate::num::Real;

/// Matrix exponential by scaling and squaring with a Taylor core.
///
/// The argument is scaled to 1-norm <= 1/2, the series is summed until the
/// next term falls below machine precision relative to the partial sum, and
/// the result is squared back.
pub fn expm<T: Real>(a: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let n = a.dim();
    let norm = a.norm_one();
    let mut squarings = 0i32;
    if norm > T::lit(0.5) {
        squarings = (norm / T::lit(0.5)).log2().ceil().to_i32().unwrap_or(0).max(0);
    }
    let scaled = a.scale_real(T::one() / T::lit(2.0).powi(squarings));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=60 {
        term = term
            .matmul(&scaled)
            .expect("square matrices of equal dimension")
            .scale_real(T::one() / T::from_usize_lossy(k));
        sum = &sum + &term;
        if term.max_abs() <= T::epsilon() * T::lit(0.25) * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum).expect("square matrix");
    }
    sum
}
