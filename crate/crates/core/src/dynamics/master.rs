use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{condition_one, eig_hermitian, expm, ComplexMatrix, DensityMatrix, HermitianOperator, Lu, Superoperator};
use crate::num::Real;

/// Condition number of the trace-augmented generator above which the
/// steady state is taken from the smallest singular vector instead.
pub const FALLBACK_CONDITION: f64 = 1e12;

/// Generator of the collision-averaged master equation
/// `d rho/dt = -i/hbar [H_S, rho] + gamma (S - 1) rho`, acting on the
/// row-major vectorization `vec(rho)[j d + k] = rho_jk`.
#[derive(Clone, Debug, PartialEq)]
pub struct Liouvillian<T: Real> {
    generator: ComplexMatrix<T>,
    dim: usize,
    gamma: T,
    hbar: T,
    energies: Vec<T>,
}

impl<T: Real> Liouvillian<T> {
    pub fn generator(&self) -> &ComplexMatrix<T> {
        &self.generator
    }

    /// System dimension `d` (the generator is `d^2 x d^2`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    /// `L[rho]` as a matrix.
    pub fn apply(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: rho.dim() });
        }
        let out = self.generator.mul_vec(rho.as_slice())?;
        ComplexMatrix::from_row_major(self.dim, out)
    }

    /// `max_a |sum_j L[jd+j, a]|`: how far `Tr L[.]` is from vanishing.
    pub fn trace_annihilation_defect(&self) -> T {
        let d = self.dim;
        let n = d * d;
        (0..n)
            .map(|a| {
                let s: Complex<T> = (0..d).map(|j| self.generator[(j * d + j, a)]).sum();
                s.norm()
            })
            .fold(T::zero(), T::max)
    }

    fn residual(&self, rho: &ComplexMatrix<T>) -> Result<T> {
        Ok(self.apply(rho)?.max_abs())
    }
}

/// Assemble the generator from a collision map, the system energies and
/// the collision rate.
pub fn liouvillian<T: Real>(superop: &Superoperator<T>, energies: &[T], hbar: T, gamma: T) -> Result<Liouvillian<T>> {
    let d = superop.dim();
    if energies.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: energies.len() });
    }
    if !(gamma >= T::zero() && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {gamma}")));
    }
    if !(hbar > T::zero()) {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    let n = d * d;
    let m = superop.matrix();
    let generator = ComplexMatrix::from_fn(n, |r, c| {
        let mut v = m[(r, c)].scale(gamma);
        if r == c {
            let (j, k) = (r / d, r % d);
            v -= Complex::new(gamma, (energies[j] - energies[k]) / hbar);
        }
        v
    });
    Ok(Liouvillian { generator, dim: d, gamma, hbar, energies: energies.to_vec() })
}

/// Result of [`steady_state`].
#[derive(Clone, Debug)]
pub struct SteadyStateSolution<T: Real> {
    pub state: DensityMatrix<T>,
    /// `max |L[rho_ss]|` after Hermitian projection and trace normalization.
    pub residual: T,
    /// 1-norm condition number of the trace-augmented system.
    pub condition: T,
    pub used_fallback: bool,
    pub min_eigenvalue: T,
}

impl<T: Real> SteadyStateSolution<T> {
    /// True when the state has an eigenvalue below `-tolerance`.
    pub fn has_negative_eigenvalue(&self, tolerance: f64) -> bool {
        self.min_eigenvalue < -T::lit(tolerance)
    }
}

/// Stationary state of the master equation.
///
/// The last row of the generator is replaced by the trace functional and
/// the system `A x = e_last` is solved directly. If that system is
/// singular or its condition number exceeds [`FALLBACK_CONDITION`], the
/// null vector is taken from the eigendecomposition of `L^dagger L`.
pub fn steady_state<T: Real>(l: &Liouvillian<T>, tolerance: f64) -> Result<SteadyStateSolution<T>> {
    if !(l.gamma > T::zero()) {
        return Err(Error::Precondition(format!(
            "steady state needs gamma > 0 (got {}); without collisions every diagonal state is stationary",
            l.gamma
        )));
    }
    let d = l.dim;
    let n = d * d;
    let mut a = l.generator.clone();
    for c in 0..n {
        a[(n - 1, c)] = if c % (d + 1) == 0 { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::zero()) };
    }
    let mut rhs = vec![Complex::new(T::zero(), T::zero()); n];
    rhs[n - 1] = Complex::new(T::one(), T::zero());

    let condition = condition_one(&a).unwrap_or(T::infinity());
    let direct = if condition <= T::lit(FALLBACK_CONDITION) {
        Lu::factor(&a).and_then(|lu| lu.solve(&rhs)).ok()
    } else {
        None
    };
    let (vec, used_fallback) = match direct {
        Some(v) => (v, false),
        None => (null_vector(l)?, true),
    };
    let raw = ComplexMatrix::from_row_major(d, vec)?;
    let tr = raw.trace();
    if tr.norm() <= T::epsilon() {
        return Err(Error::Singular("stationary vector has vanishing trace".into()));
    }
    let normalized = raw.scale(Complex::new(T::one(), T::zero()) / tr).hermitian_part();
    let state = DensityMatrix::from_evolved(&normalized).renormalized();
    if !state.matrix().is_finite() {
        return Err(Error::NonFinite("steady state"));
    }
    let residual = l.residual(state.matrix())?;
    if residual > T::tol(tolerance) {
        return Err(Error::NotConverged(format!(
            "steady-state residual {residual:e} exceeds tolerance {tolerance:e}"
        )));
    }
    let min_eigenvalue = state.min_eigenvalue();
    Ok(SteadyStateSolution { state, residual, condition, used_fallback, min_eigenvalue })
}

fn null_vector<T: Real>(l: &Liouvillian<T>) -> Result<Vec<Complex<T>>> {
    let g = &l.generator;
    let gram = HermitianOperator::hermitian_part_of(&g.adjoint().matmul(g)?);
    let eig = eig_hermitian(&gram);
    let top = eig.max().max(T::min_positive_value());
    let floor = T::lit(1e-14) * top;
    if eig.values.len() > 1 && eig.values[1] <= floor {
        return Err(Error::Degenerate(format!(
            "generator null space has dimension > 1 (second singular value^2 {:e})",
            eig.values[1]
        )));
    }
    let n = eig.values.len();
    Ok((0..n).map(|r| eig.vectors[(r, 0)]).collect())
}

fn check_grid<T: Real>(t_grid: &[T]) -> Result<()> {
    let mut prev = T::zero();
    for &t in t_grid {
        if !(t >= prev) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time grid must be finite, non-negative and ascending (got {t} after {prev})"
            )));
        }
        prev = t;
    }
    Ok(())
}

fn check_state<T: Real>(l: &Liouvillian<T>, rho0: &DensityMatrix<T>) -> Result<()> {
    if rho0.dim() != l.dim {
        return Err(Error::DimensionMismatch { expected: l.dim, found: rho0.dim() });
    }
    Ok(())
}

/// `rho(t) = exp(L t) rho0` on every point of an ascending grid.
pub fn evolve_master<T: Real>(l: &Liouvillian<T>, rho0: &DensityMatrix<T>, t_grid: &[T]) -> Result<Vec<DensityMatrix<T>>> {
    check_grid(t_grid)?;
    check_state(l, rho0)?;
    t_grid
        .iter()
        .map(|&t| {
            if t == T::zero() {
                return Ok(rho0.clone());
            }
            let prop = expm(&l.generator.scale_real(t));
            let v = prop.mul_vec(rho0.matrix().as_slice())?;
            let m = ComplexMatrix::from_row_major(l.dim, v)?;
            if !m.is_finite() {
                return Err(Error::NonFinite("master-equation propagator"));
            }
            Ok(DensityMatrix::from_evolved(&m))
        })
        .collect()
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B_ERR: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Same quantity as [`evolve_master`], integrated with an adaptive
/// Dormand-Prince 5(4) scheme at relative tolerance `rtol`.
pub fn integrate_master_adaptive<T: Real>(
    l: &Liouvillian<T>,
    rho0: &DensityMatrix<T>,
    t_grid: &[T],
    rtol: f64,
) -> Result<Vec<DensityMatrix<T>>> {
    check_grid(t_grid)?;
    check_state(l, rho0)?;
    if !(rtol > 0.0) {
        return Err(Error::InvalidParameter(format!("rtol must be positive, got {rtol}")));
    }
    let rtol = T::tol(rtol);
    let g = &l.generator;
    let n = g.dim();
    let f = |y: &[Complex<T>]| g.mul_vec(y);
    let mut y: Vec<Complex<T>> = rho0.matrix().as_slice().to_vec();
    let mut t = T::zero();
    let mut h = {
        let scale = g.norm_one().max(T::one());
        T::lit(0.01) / scale
    };
    let mut out = Vec::with_capacity(t_grid.len());
    let mut k1 = f(&y)?;
    let mut steps = 0usize;
    for &target in t_grid {
        while t < target {
            steps += 1;
            if steps > 10_000_000 {
                return Err(Error::NotConverged("adaptive integrator exceeded step budget".into()));
            }
            let step = h.min(target - t);
            let mut k: Vec<Vec<Complex<T>>> = vec![k1.clone()];
            for s in 1..7 {
                let mut ys = y.clone();
                for (p, kp) in k.iter().enumerate() {
                    let a = T::lit(A[s][p]) * step;
                    if a != T::zero() {
                        for i in 0..n {
                            ys[i] += kp[i].scale(a);
                        }
                    }
                }
                k.push(f(&ys)?);
            }
            let mut y_new = y.clone();
            for (p, kp) in k.iter().take(6).enumerate() {
                let b = T::lit(A[6][p]) * step;
                for i in 0..n {
                    y_new[i] += kp[i].scale(b);
                }
            }
            let mut err = T::zero();
            for i in 0..n {
                let mut e = Complex::new(T::zero(), T::zero());
                for (p, kp) in k.iter().enumerate() {
                    e += kp[i].scale(T::lit(B_ERR[p]) * step);
                }
                let sc = rtol * (T::lit(1e-3) + y[i].norm().max(y_new[i].norm()));
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() {
                return Err(Error::NonFinite("adaptive integrator error estimate"));
            }
            if err <= T::one() {
                t = if step == target - t { target } else { t + step };
                y = y_new;
                k1 = k.pop().expect("seven stages");
            }
            let factor = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
            };
            h = step * factor;
        }
        let m = ComplexMatrix::from_row_major(l.dim, y.clone())?;
        out.push(DensityMatrix::from_evolved(&m));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{full_dephasing, gibbs_state};

    fn thermal_pop_map(p01: f64, p10: f64) -> Superoperator<f64> {
        let pm = [[1.0 - p01, p01], [p10, 1.0 - p10]];
        Superoperator::from_tensor_fn(2, |j, k, jp, kp| {
            if j == k && jp == kp {
                Complex::new(pm[j][jp], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn generator_annihilates_trace() {
        let s = thermal_pop_map(0.2, 0.1);
        let l = liouvillian(&s, &[-0.3, 0.3], 1.0, 2.0).unwrap();
        assert!(l.trace_annihilation_defect() < 1e-15);
        let rho = ComplexMatrix::from_rows(&[
            vec![Complex::new(0.3, 0.0), Complex::new(0.1, 0.2)],
            vec![Complex::new(0.1, -0.2), Complex::new(0.7, 0.0)],
        ])
        .unwrap();
        let out = l.apply(&rho).unwrap();
        assert!(out.trace().norm() < 1e-15);
        assert!((out[(0, 1)] - Complex::new(0.1, 0.2) * Complex::new(-2.0, 0.6)).norm() < 1e-15);
    }

    #[test]
    fn steady_state_of_population_chain() {
        let s = thermal_pop_map(0.2, 0.1);
        let l = liouvillian(&s, &[-0.3, 0.3], 1.0, 1.0).unwrap();
        let ss = steady_state(&l, 1e-10).unwrap();
        assert!(!ss.used_fallback);
        assert!((ss.state.entry(0, 0).re - 1.0 / 3.0).abs() < 1e-14);
        assert!(ss.state.entry(0, 1).norm() < 1e-15);
        assert!(ss.residual < 1e-15);
    }

    #[test]
    fn steady_state_rejects_zero_rate() {
        let l = liouvillian(&full_dephasing::<f64>(2), &[-0.3, 0.3], 1.0, 0.0).unwrap();
        assert!(matches!(steady_state(&l, 1e-10), Err(Error::Precondition(_))));
    }

    #[test]
    fn fallback_matches_direct_solution() {
        let s = thermal_pop_map(0.2, 0.1);
        let l = liouvillian(&s, &[-0.3, 0.3], 1.0, 1.0).unwrap();
        let v = null_vector(&l).unwrap();
        let tr = v[0] + v[3];
        assert!(((v[0] / tr).re - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn pure_dephasing_has_degenerate_null_space() {
        let l = liouvillian(&full_dephasing::<f64>(2), &[-0.3, 0.3], 1.0, 1.0).unwrap();
        assert!(matches!(null_vector(&l), Err(Error::Degenerate(_))));
    }

    #[test]
    fn expm_and_adaptive_agree() {
        let s = thermal_pop_map(0.2, 0.1);
        let l = liouvillian(&s, &[-0.3, 0.3], 1.0, 0.7).unwrap();
        let m = ComplexMatrix::from_rows(&[
            vec![Complex::new(0.5, 0.0), Complex::new(0.3, 0.2)],
            vec![Complex::new(0.3, -0.2), Complex::new(0.5, 0.0)],
        ])
        .unwrap();
        let rho = DensityMatrix::from_matrix(m).unwrap();
        let grid = [0.0, 0.1, 1.0, 3.0, 20.0];
        let a = evolve_master(&l, &rho, &grid).unwrap();
        let b = integrate_master_adaptive(&l, &rho, &grid, 1e-11).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.distance(y).unwrap() < 1e-9);
        }
        let exact01 = Complex::new(0.3, 0.2) * (Complex::new(-0.7, 0.6) * 3.0).exp();
        assert!((a[3].entry(0, 1) - exact01).norm() < 1e-13);
        let p00 = 1.0 / 3.0 + (0.5 - 1.0 / 3.0) * (-0.21f64 * 20.0).exp();
        assert!((a[4].entry(0, 0).re - p00).abs() < 1e-13);
        assert!(evolve_master(&l, &rho, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn gibbs_is_stationary_for_balanced_chain() {
        let g = gibbs_state(&[-0.3, 0.3], 0.1).unwrap();
        let ratio = (-0.06f64).exp();
        let s = thermal_pop_map(0.1 * ratio, 0.1);
        let l = liouvillian(&s, &[-0.3, 0.3], 1.0, 3.0).unwrap();
        assert!(l.apply(g.matrix()).unwrap().max_abs() < 1e-16);
    }
}
