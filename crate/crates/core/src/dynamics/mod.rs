//! Evolution under collisions: dephased concatenation, Poissonian
//! trajectories, the averaged master equation and its steady state.

mod master;
mod perturbative;
mod trajectory;

pub use master::{
    evolve_master, integrate_master_adaptive, liouvillian, steady_state, Liouvillian,
    SteadyStateSolution, FALLBACK_CONDITION,
};
pub use perturbative::{perturbative_steady, PerturbativeSolution};
pub use trajectory::{
    ensemble_mean, observe_trajectory, sample_trajectory, EnsembleStats, TrajectoryRecord,
    TrajectorySpec,
};

use num_complex::Complex;

use crate::collision::CollisionMap;
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, Superoperator};
use crate::num::Real;

/// Thermal state `exp(-beta H_S) / Z` in the energy eigenbasis.
pub fn gibbs_state<T: Real>(energies: &[T], beta: T) -> Result<DensityMatrix<T>> {
    if !(beta > T::zero()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if energies.is_empty() {
        return Err(Error::InvalidParameter("no energy levels".into()));
    }
    let e0 = energies.iter().copied().fold(T::infinity(), T::min);
    let w: Vec<T> = energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: T = w.iter().copied().sum();
    let p: Vec<T> = w.into_iter().map(|x| x / z).collect();
    DensityMatrix::from_populations(&p)
}

/// Projector onto the diagonal: `D^{jk}_{j'k'} = delta_{jj'} delta_{kk'} delta_{jk}`.
pub fn full_dephasing<T: Real>(d: usize) -> Superoperator<T> {
    Superoperator::from_tensor_fn(d, |j, k, jp, kp| {
        if j == jp && k == kp && j == k {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// Largest map trace defect accepted by [`iterate_dephased`].
pub const DEPHASED_TRACE_LIMIT: f64 = 1e-6;

/// `(D S)^k rho0` for `k = 1..=n`.
///
/// Any warnings attached to the map (non-convergence, complete-positivity
/// violations) stay on `map.diagnostics()`; the iteration itself does not
/// re-check them.
pub fn iterate_dephased<T: Real>(
    map: &CollisionMap<T>,
    rho0: &DensityMatrix<T>,
    n: usize,
) -> Result<Vec<DensityMatrix<T>>> {
    let defect = map.diagnostics().trace_defect;
    if defect > DEPHASED_TRACE_LIMIT {
        return Err(Error::Precondition(format!(
            "map trace defect {defect:e} exceeds {DEPHASED_TRACE_LIMIT:e}"
        )));
    }
    let composite = full_dephasing::<T>(map.dim()).after(map.superop())?;
    let mut out = Vec::with_capacity(n);
    let mut state = rho0.matrix().clone();
    for _ in 0..n {
        state = composite.apply(&state)?;
        out.push(DensityMatrix::from_evolved(&state));
    }
    Ok(out)
}

/// Order-of-magnitude coherence estimate
/// `s^2 (gamma / omega) exp(-beta m dx^2 omega^2 / 2)`.
pub fn coherence_estimate<T: Real>(gamma: T, omega: T, beta: T, mass: T, dx: T, s_const: T) -> Result<T> {
    for (name, v) in [
        ("gamma", gamma),
        ("omega", omega),
        ("beta", beta),
        ("mass", mass),
        ("dx", dx),
        ("s_const", s_const),
    ] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(s_const * s_const * gamma / omega * (-beta * mass * dx * dx * omega * omega / T::lit(2.0)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;

    #[test]
    fn gibbs_values() {
        let g = gibbs_state::<f64>(&[-0.3, 0.3], 0.1).unwrap();
        assert!((g.entry(0, 0).re - 0.514_995_501_619_41).abs() < 1e-14);
        let hot = gibbs_state::<f64>(&[-0.3, 0.3, 1.0], 1e-9).unwrap();
        for p in hot.populations() {
            assert!((p - 1.0 / 3.0).abs() < 1e-8);
        }
        let flat = gibbs_state(&[0.5, 0.5], 3.0).unwrap();
        assert_eq!(flat.populations(), vec![0.5, 0.5]);
        assert!(gibbs_state(&[0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn dephasing_is_idempotent_and_trace_preserving() {
        let d = full_dephasing::<f64>(3);
        let dd = d.after(&d).unwrap();
        assert_eq!(dd, d);
        assert_eq!(d.trace_defect(), 0.0);
        let rho = ComplexMatrix::from_fn(3, |r, c| Complex::new((r + 2 * c) as f64, r as f64 - c as f64));
        let out = d.apply(&rho).unwrap();
        assert_eq!(out.trace(), rho.trace());
        let diag = ComplexMatrix::real_diagonal(&[0.2, 0.5, 0.3]);
        assert_eq!(d.apply(&diag).unwrap(), diag);
    }

    #[test]
    fn identity_map_iteration_freezes_diagonal() {
        let map = CollisionMap::from_superop(Superoperator::identity(2), vec![-0.3, 0.3], 0.1).unwrap();
        let m = ComplexMatrix::from_rows(&[
            vec![Complex::new(0.4, 0.0), Complex::new(0.2, 0.1)],
            vec![Complex::new(0.2, -0.1), Complex::new(0.6, 0.0)],
        ])
        .unwrap();
        let rho = DensityMatrix::from_matrix(m).unwrap();
        let seq = iterate_dephased(&map, &rho, 5).unwrap();
        for s in seq {
            assert_eq!(s.populations(), vec![0.4, 0.6]);
            assert_eq!(s.entry(0, 1), Complex::new(0.0, 0.0));
        }
    }

    #[test]
    fn estimate_values() {
        let v: f64 = coherence_estimate(5.0, 0.6, 0.1, 0.1, 1.0, 0.01).unwrap();
        assert!((v - 8.318_346_825_236_978e-4).abs() < 1e-18);
        let doubled: f64 = coherence_estimate(10.0, 0.6, 0.1, 0.1, 1.0, 0.01).unwrap();
        assert!((doubled - 2.0 * v).abs() < 1e-18);
        assert!(coherence_estimate(5.0, 0.6, 0.1, 0.1, 1e3, 0.01).unwrap() < 1e-300);
        assert!(coherence_estimate(5.0, 1e4, 0.1, 0.1, 1.0, 0.01).unwrap() == 0.0);
        assert!(coherence_estimate(-1.0, 0.6, 0.1, 0.1, 1.0, 0.01).is_err());
    }
}
