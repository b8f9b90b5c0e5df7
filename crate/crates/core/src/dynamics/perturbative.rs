use num_complex::Complex;

use super::gibbs_state;
use crate::collision::{detailed_balance_defect, population_block};
use crate::error::{Error, Result};
use crate::linalg::{solve, ComplexMatrix, DensityMatrix, Superoperator};
use crate::num::Real;

/// Largest detailed-balance defect for which the Gibbs state is accepted
/// as the zeroth-order steady state.
pub const DETAILED_BALANCE_LIMIT: f64 = 1e-6;

/// Steady state expanded to first order in the collision rate:
/// `rho_ss = rho0 + gamma rho1 + O(gamma^2)`.
#[derive(Clone, Debug)]
pub struct PerturbativeSolution<T: Real> {
    pub rho0: DensityMatrix<T>,
    pub rho1: ComplexMatrix<T>,
    pub order: usize,
}

impl<T: Real> PerturbativeSolution<T> {
    /// `rho0 + gamma rho1`.
    pub fn first_order(&self, gamma: T) -> ComplexMatrix<T> {
        self.rho0.matrix() + &self.rho1.scale_real(gamma)
    }
}

/// First-order expansion of the steady state for small collision rates.
///
/// Coherences follow from balancing the free rotation against one
/// collision acting on the Gibbs state; the first-order populations solve
/// the population chain driven by those coherences, with zero trace.
pub fn perturbative_steady<T: Real>(
    superop: &Superoperator<T>,
    energies: &[T],
    beta: T,
    hbar: T,
) -> Result<PerturbativeSolution<T>> {
    let d = superop.dim();
    if energies.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: energies.len() });
    }
    for j in 0..d {
        for k in 0..j {
            if energies[j] == energies[k] {
                return Err(Error::Degenerate(format!(
                    "levels {k} and {j} share energy {}; the first-order coherence is undefined",
                    energies[j]
                )));
            }
        }
    }
    let db = detailed_balance_defect(&population_block(superop), energies, beta);
    if db > T::lit(DETAILED_BALANCE_LIMIT) {
        return Err(Error::Precondition(format!(
            "detailed-balance defect {db:e} too large for a Gibbs zeroth order"
        )));
    }
    let rho0 = gibbs_state(energies, beta)?;
    let p0 = rho0.populations();

    let mut rho1 = ComplexMatrix::zeros(d);
    for j in 0..d {
        for k in 0..d {
            if j == k {
                continue;
            }
            let driven: Complex<T> = (0..d).map(|jp| superop.tensor(jp, jp, j, k).scale(p0[jp])).sum();
            let bohr = energies[j] - energies[k];
            rho1[(j, k)] = Complex::new(T::zero(), -hbar / bohr) * driven;
        }
    }

    let mut a = ComplexMatrix::zeros(d);
    let mut rhs = vec![Complex::new(T::zero(), T::zero()); d];
    for j in 0..d {
        for jp in 0..d {
            a[(j, jp)] = superop.tensor(jp, jp, j, j);
        }
        a[(j, j)] -= Complex::new(T::one(), T::zero());
        let mut s = Complex::new(T::zero(), T::zero());
        for jp in 0..d {
            for kp in 0..d {
                if jp != kp {
                    s += superop.tensor(jp, kp, j, j) * rho1[(jp, kp)];
                }
            }
        }
        rhs[j] = -s;
    }
    for c in 0..d {
        a[(d - 1, c)] = Complex::new(T::one(), T::zero());
    }
    rhs[d - 1] = Complex::new(T::zero(), T::zero());
    let diag = solve(&a, &rhs)?;
    for j in 0..d {
        rho1[(j, j)] = Complex::new(diag[j].re, T::zero());
    }
    if !rho1.is_finite() {
        return Err(Error::NonFinite("first-order steady-state correction"));
    }
    Ok(PerturbativeSolution { rho0, rho1, order: 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{liouvillian, steady_state};

    fn balanced_map() -> Superoperator<f64> {
        let r = (-0.06f64).exp();
        let pm = [[1.0 - 0.1 * r, 0.1 * r], [0.1, 0.9]];
        Superoperator::from_tensor_fn(2, |j, k, jp, kp| {
            let mut v = Complex::new(0.0, 0.0);
            if j == k && jp == kp {
                v.re = pm[j][jp];
            }
            if j != k && jp == j && kp == k {
                v.re = 0.8;
            }
            if j == k && jp != kp {
                v = if jp == 0 { Complex::new(0.05, 0.02) } else { Complex::new(0.05, -0.02) };
            }
            v
        })
    }

    #[test]
    fn matches_exact_steady_state_at_small_rate() {
        let s = balanced_map();
        let e = [-0.3, 0.3];
        let pert = perturbative_steady(&s, &e, 0.1, 1.0).unwrap();
        assert_eq!(pert.order, 1);
        assert!(pert.rho1.trace().norm() < 1e-15);
        assert!(pert.rho1.hermiticity_defect() < 1e-15);
        for gamma in [1e-3, 1e-4] {
            let l = liouvillian(&s, &e, 1.0, gamma).unwrap();
            let exact = steady_state(&l, 1e-10).unwrap().state;
            let approx = pert.first_order(gamma);
            let err = exact.matrix().max_abs_diff(&approx).unwrap();
            assert!(err < 50.0 * gamma * gamma, "gamma {gamma}: {err}");
        }
    }

    #[test]
    fn rejects_degenerate_levels() {
        let s = Superoperator::<f64>::identity(2);
        assert!(matches!(perturbative_steady(&s, &[0.1, 0.1], 1.0, 1.0), Err(Error::Degenerate(_))));
    }
}
