//! The collision map: momentum quadrature of products of scattering
//! amplitudes weighted by the incident particle's density matrix, plus
//! detailed-balance and channel-quality diagnostics.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{choi_matrix, Superoperator};
use crate::num::{cis, czero, Real};
use crate::quadrature::{panel_breaks, GaussLegendre};
use crate::scattering::{amplitudes, backend_breakpoints, AmplitudeSet, Backend, ScatteringModel};

/// Choi eigenvalues below this raise a warning on the map.
pub const CP_WARNING_THRESHOLD: f64 = -1e-6;
/// Entry change under node doubling above which the map carries a warning.
pub const CONVERGENCE_WARNING_THRESHOLD: f64 = 1e-6;

/// Incident particle: effusion momentum density with a Gaussian position
/// profile of width `dx` centred at `x0` (relative to the barrier centre).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParticleDensity<T: Real> {
    beta: T,
    mass: T,
    dx: T,
    x0: T,
    hbar: T,
}

impl<T: Real> ParticleDensity<T> {
    pub fn new(beta: T, mass: T, dx: T, x0: T, hbar: T) -> Result<Self> {
        for (name, v) in [("beta", beta), ("mass", mass), ("dx", dx), ("hbar", hbar)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !x0.is_finite() {
            return Err(Error::NonFinite("x0"));
        }
        let p = Self {
            beta,
            mass,
            dx,
            x0,
            hbar,
        };
        if !p.wigner_valid() {
            return Err(Error::InvalidParameter(format!(
                "Wigner function invalid: requires 4*pi*dx*sqrt(mass/beta) >= hbar, got {} < {}",
                p.wigner_lhs(),
                hbar
            )));
        }
        Ok(p)
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn x0(&self) -> T {
        self.x0
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    fn wigner_lhs(&self) -> T {
        T::lit(4.0) * T::PI() * self.dx * (self.mass / self.beta).sqrt()
    }

    /// `4 pi dx sqrt(m / beta) >= hbar`
    pub fn wigner_valid(&self) -> bool {
        self.wigner_lhs() >= self.hbar
    }

    /// `mu(p) = (beta p / m) exp(-beta p^2 / 2m)` for `p >= 0`.
    pub fn effusion_pdf(&self, p: T) -> Result<T> {
        if p < T::zero() {
            return Err(Error::Domain(format!("effusion density needs p >= 0, got {p}")));
        }
        Ok(self.mu(p))
    }

    #[inline]
    fn mu(&self, p: T) -> T {
        self.beta * p / self.mass * (-self.beta * p * p / (T::lit(2.0) * self.mass)).exp()
    }

    /// `<p| rho_U |p'> = mu((p+p')/2) exp(-dx^2 (p-p')^2 / 2 hbar^2 - i (p-p') x0 / hbar)`
    pub fn rho_u(&self, p: T, pp: T) -> Result<Complex<T>> {
        let mean = (p + pp) * T::lit(0.5);
        if mean < T::zero() {
            return Err(Error::Domain(format!(
                "momentum density needs (p + p')/2 >= 0, got {mean}"
            )));
        }
        Ok(self.rho_u_unchecked(p, pp))
    }

    #[inline]
    fn rho_u_unchecked(&self, p: T, pp: T) -> Complex<T> {
        let mean = (p + pp) * T::lit(0.5);
        let diff = p - pp;
        let envelope = (-self.dx * self.dx * diff * diff / (T::lit(2.0) * self.hbar * self.hbar)).exp();
        cis(-diff * self.x0 / self.hbar) * (self.mu(mean) * envelope)
    }

    /// Momentum beyond which the effusion weight is below `tolerance`:
    /// `sqrt(2 m ln(1/tolerance) / beta)`.
    pub fn momentum_cutoff(&self, tolerance: f64) -> T {
        (T::lit(2.0) * self.mass * T::lit((1.0 / tolerance).ln()) / self.beta).sqrt()
    }
}

/// Discretization of the momentum integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss-Legendre nodes per smooth panel.
    pub nodes: usize,
    /// Effusion tail weight dropped beyond the cutoff.
    pub p_cut_tolerance: f64,
    /// Also evaluate every entry with doubled nodes and record the change.
    pub check_convergence: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 400,
            p_cut_tolerance: 1e-14,
            check_convergence: true,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least 16 nodes, got {}",
                self.nodes
            )));
        }
        if !(self.p_cut_tolerance > 0.0 && self.p_cut_tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p_cut_tolerance must lie in (0, 1), got {}",
                self.p_cut_tolerance
            )));
        }
        Ok(())
    }
}

/// Quality record of a collision map.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MapDiagnostics {
    /// `max_{j,k} |sum_{j'} S^{jk}_{j'j'} - delta_{jk}|`
    pub trace_defect: f64,
    /// Same, over population columns only.
    pub population_trace_defect: f64,
    /// Hermiticity-preservation defect before symmetrization.
    pub hermiticity_defect: f64,
    pub choi_min_eigenvalue: f64,
    /// Detailed-balance residual of the population block.
    pub detailed_balance_defect: f64,
    /// Largest entry change under node doubling, when it was measured.
    pub convergence_delta: Option<f64>,
    pub warnings: Vec<String>,
}

/// Transition probabilities `P_{j -> j'}` stored at `(j, j')`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix<T: Real> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> TransitionMatrix<T> {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for jp in 0..dim {
                data.push(f(j, jp));
            }
        }
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |j, jp| if j == jp { T::one() } else { T::zero() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `P_{from -> to}`
    #[inline]
    pub fn get(&self, from: usize, to: usize) -> T {
        self.data[from * self.dim + to]
    }

    /// `sum_{j'} P_{j -> j'}`
    pub fn row_sum(&self, from: usize) -> T {
        (0..self.dim).map(|to| self.get(from, to)).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }
}

/// `max_{j,j'} |exp(-beta e_j) P_{j->j'} - exp(-beta e_{j'}) P_{j'->j}|`
///
/// Boltzmann factors are taken relative to the ground level, which leaves
/// the residual unchanged for levels at or above zero energy and avoids
/// overflow otherwise.
pub fn detailed_balance_defect<T: Real>(probs: &TransitionMatrix<T>, energies: &[T], beta: T) -> T {
    let d = probs.dim();
    let e0 = energies.iter().copied().fold(T::infinity(), T::min).min(T::zero());
    let w: Vec<T> = energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let scale = (-beta * (-e0)).exp();
    let mut m = T::zero();
    for j in 0..d {
        for jp in 0..d {
            let r = (w[j] * probs.get(j, jp) - w[jp] * probs.get(jp, j)) * scale;
            m = m.max(r.abs());
        }
    }
    m
}

/// Population block `S^{jj}_{j'j'}` of a superoperator.
pub fn population_block<T: Real>(s: &Superoperator<T>) -> TransitionMatrix<T> {
    TransitionMatrix::from_fn(s.dim(), |j, jp| s.tensor(j, j, jp, jp).re)
}

/// Trace, Hermiticity, complete-positivity and detailed-balance diagnostics.
pub fn map_diagnostics<T: Real>(s: &Superoperator<T>, energies: &[T], beta: T) -> MapDiagnostics {
    let choi_min = choi_matrix(s).eig().min().as_f64();
    let mut warnings = Vec::new();
    if choi_min < CP_WARNING_THRESHOLD {
        warnings.push(format!(
            "map is not completely positive: minimum Choi eigenvalue {choi_min:e}"
        ));
    }
    MapDiagnostics {
        trace_defect: s.trace_defect().as_f64(),
        population_trace_defect: s.population_trace_defect().as_f64(),
        hermiticity_defect: s.hermiticity_defect().as_f64(),
        choi_min_eigenvalue: choi_min,
        detailed_balance_defect: detailed_balance_defect(&population_block(s), energies, beta)
            .as_f64(),
        convergence_delta: None,
        warnings,
    }
}

/// Collision superoperator with its diagnostics.
#[derive(Clone, Debug)]
pub struct CollisionMap<T: Real> {
    superop: Superoperator<T>,
    diagnostics: MapDiagnostics,
    energies: Vec<T>,
    beta: T,
}

impl<T: Real> CollisionMap<T> {
    /// Wraps an arbitrary superoperator, computing its diagnostics.
    pub fn from_superop(superop: Superoperator<T>, energies: Vec<T>, beta: T) -> Result<Self> {
        if superop.dim() != energies.len() {
            return Err(Error::DimensionMismatch {
                expected: energies.len(),
                found: superop.dim(),
            });
        }
        let diagnostics = map_diagnostics(&superop, &energies, beta);
        Ok(Self {
            superop,
            diagnostics,
            energies,
            beta,
        })
    }

    pub fn superop(&self) -> &Superoperator<T> {
        &self.superop
    }

    pub fn diagnostics(&self) -> &MapDiagnostics {
        &self.diagnostics
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.superop.dim()
    }

    pub fn population_block(&self) -> TransitionMatrix<T> {
        population_block(&self.superop)
    }

    /// Full dephasing applied after the collision.
    pub fn dephased(&self) -> Self {
        let d = self.dim();
        let s = Superoperator::from_tensor_fn(d, |j, k, jp, kp| {
            if jp == kp {
                self.superop.tensor(j, k, jp, kp)
            } else {
                czero()
            }
        });
        let mut diagnostics = map_diagnostics(&s, &self.energies, self.beta);
        diagnostics.convergence_delta = self.diagnostics.convergence_delta;
        Self {
            superop: s,
            diagnostics,
            energies: self.energies.clone(),
            beta: self.beta,
        }
    }
}

struct EntryGeometry<T> {
    /// `2 m (Delta_{j'j} - Delta_{k'k})`, so that `pi(p)^2 = p^2 - shift`.
    shift: T,
    lo: T,
    hi: T,
    breaks: Vec<T>,
}

fn entry_geometry<T: Real>(
    model: &ScatteringModel<T>,
    backend_breaks: &[T],
    p_cut: T,
    (j, k, jp, kp): (usize, usize, usize, usize),
) -> EntryGeometry<T> {
    let two_m = T::lit(2.0) * model.mass();
    let djj = model.bohr(jp, j);
    let dkk = model.bohr(kp, k);
    let shift = two_m * (djj - dkk);
    let lo = (two_m * T::zero().max(djj).max(djj - dkk)).sqrt();
    let hi = (p_cut * p_cut + shift.max(T::zero())).sqrt();
    let e = model.energies();
    let interior = backend_breaks.iter().flat_map(|&b| {
        let first = two_m * (b - e[j]);
        let second = two_m * (b + djj - e[kp]);
        [first, second]
            .into_iter()
            .filter(|&x| x > T::zero())
            .map(|x| x.sqrt())
    });
    let breaks = if hi > lo {
        panel_breaks(lo, hi, interior)
    } else {
        Vec::new()
    };
    EntryGeometry {
        shift,
        lo,
        hi,
        breaks,
    }
}

fn amplitude_sum<T: Real>(
    s1: &AmplitudeSet<T>,
    s2: &AmplitudeSet<T>,
    backend: Backend,
    (j, k, jp, kp): (usize, usize, usize, usize),
) -> Complex<T> {
    let mut acc = s1.transmission[(jp, j)] * s2.transmission[(kp, k)].conj();
    if backend == Backend::Exact {
        acc = acc + s1.reflection[(jp, j)] * s2.reflection[(kp, k)].conj();
    }
    acc
}

fn map_entry<T: Real>(
    model: &ScatteringModel<T>,
    particle: &ParticleDensity<T>,
    backend: Backend,
    rule: &GaussLegendre<T>,
    geom: &EntryGeometry<T>,
    idx: (usize, usize, usize, usize),
) -> Result<Complex<T>> {
    if geom.hi <= geom.lo {
        return Ok(czero());
    }
    let (j, k, _, _) = idx;
    let two_m = T::lit(2.0) * model.mass();
    let e = model.energies();
    let mut failure: Option<Error> = None;
    let value = rule.integrate_panels(&geom.breaks, |p| {
        if failure.is_some() {
            return czero();
        }
        let pi = if geom.shift == T::zero() {
            p
        } else {
            (p * p - geom.shift).max(T::zero()).sqrt()
        };
        if !(pi > T::zero()) || !(p > T::zero()) {
            return czero();
        }
        // Total energies of the two incident waves; the second is written as
        // e_k + pi^2/2m (equal to p^2/2m - Delta_{j'j} + e_{k'}) so that it never
        // rounds below its own threshold.
        let first_energy = e[j] + p * p / two_m;
        let second_energy = e[k] + pi * pi / two_m;
        if !(first_energy > e[j] && second_energy > e[k]) {
            return czero();
        }
        let first = amplitudes(model, first_energy, backend);
        let second = amplitudes(model, second_energy, backend);
        match (first, second) {
            (Ok(s1), Ok(s2)) => {
                particle.rho_u_unchecked(p, pi) * (p / pi).sqrt() * amplitude_sum(&s1, &s2, backend, idx)
            }
            (Err(err), _) | (_, Err(err)) => {
                failure = Some(err);
                czero()
            }
        }
    });
    match failure {
        Some(err) => Err(err),
        None => Ok(value),
    }
}

/// Builds the collision superoperator
/// `S^{jk}_{j'k'} = sum_alpha int dp rho_U(p, pi(p)) sqrt(p / pi(p))
///   s_{j'j}(p^2/2m + e_j) conj(s_{k'k}(p^2/2m - Delta_{j'j} + e_{k'}))`,
/// with `pi(p) = sqrt(p^2 - 2m(Delta_{j'j} - Delta_{k'k}))` and the lower limit
/// `p_inf^2 / 2m = max(0, Delta_{j'j}, Delta_{j'j} - Delta_{k'k})`.
///
/// Each entry is integrated on panels split at the backend's non-smooth
/// energies, up to the effusion cutoff. The result is symmetrized under the
/// Hermiticity pairing; the defect before symmetrization is kept in the
/// diagnostics.
pub fn build_map<T: Real>(
    model: &ScatteringModel<T>,
    particle: &ParticleDensity<T>,
    backend: Backend,
    quad: &QuadratureSpec,
) -> Result<CollisionMap<T>> {
    quad.validate()?;
    if !particle.wigner_valid() {
        return Err(Error::InvalidParameter(
            "Wigner function invalid: requires 4*pi*dx*sqrt(mass/beta) >= hbar".into(),
        ));
    }
    if (particle.mass() - model.mass()).abs() > T::epsilon() * model.mass() * T::lit(4.0)
        || (particle.hbar() - model.hbar()).abs() > T::epsilon() * model.hbar() * T::lit(4.0)
    {
        return Err(Error::InvalidParameter(
            "particle and model must share mass and hbar".into(),
        ));
    }
    let d = model.dim();
    let rule = GaussLegendre::<T>::new(quad.nodes);
    let fine = quad
        .check_convergence
        .then(|| GaussLegendre::<T>::new(2 * quad.nodes));
    let p_cut = particle.momentum_cutoff(quad.p_cut_tolerance);
    let breaks = backend_breakpoints(model, backend);

    let indices: Vec<(usize, usize, usize, usize)> = (0..d)
        .flat_map(|j| {
            (0..d).flat_map(move |k| (0..d).flat_map(move |jp| (0..d).map(move |kp| (j, k, jp, kp))))
        })
        .collect();
    let values: Vec<(Complex<T>, Option<T>)> = indices
        .par_iter()
        .map(|&idx| {
            let geom = entry_geometry(model, &breaks, p_cut, idx);
            let v = map_entry(model, particle, backend, &rule, &geom, idx)?;
            let delta = match &fine {
                Some(f) => Some((map_entry(model, particle, backend, f, &geom, idx)? - v).norm()),
                None => None,
            };
            Ok((v, delta))
        })
        .collect::<Result<_>>()?;

    let raw = Superoperator::from_tensor_fn(d, |j, k, jp, kp| values[((j * d + k) * d + jp) * d + kp].0);
    if !raw.matrix().is_finite() {
        return Err(Error::NonFinite("collision map"));
    }
    let symmetric = raw.hermiticity_symmetrized();
    let mut diagnostics = map_diagnostics(&symmetric, model.energies(), particle.beta());
    diagnostics.hermiticity_defect = raw.hermiticity_defect().as_f64();
    if quad.check_convergence {
        let delta = values
            .iter()
            .filter_map(|(_, d)| *d)
            .fold(T::zero(), T::max)
            .as_f64();
        diagnostics.convergence_delta = Some(delta);
        if delta > CONVERGENCE_WARNING_THRESHOLD {
            diagnostics.warnings.push(format!(
                "quadrature not converged: entries change by {delta:e} under node doubling"
            ));
        }
    }
    Ok(CollisionMap {
        superop: symmetric,
        diagnostics,
        energies: model.energies().to_vec(),
        beta: particle.beta(),
    })
}

/// Energy-representation populations
/// `P_{j->j'} = beta exp(beta e_j) sum_alpha int_{max(e_j, e_j')} de exp(-beta e) |s_{j'j}(e)|^2`,
/// an independent route to the population block of [`build_map`].
pub fn transition_probs_energy<T: Real>(
    model: &ScatteringModel<T>,
    beta: T,
    backend: Backend,
    quad: &QuadratureSpec,
) -> Result<TransitionMatrix<T>> {
    quad.validate()?;
    if !(beta > T::zero()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let d = model.dim();
    let rule = GaussLegendre::<T>::new(quad.nodes);
    let window = T::lit((1.0 / quad.p_cut_tolerance).ln()) / beta;
    let e = model.energies();
    let breaks = backend_breakpoints(model, backend);
    let mut out = vec![T::zero(); d * d];
    for j in 0..d {
        for jp in 0..d {
            let lo = e[j].max(e[jp]);
            let hi = e[j] + window;
            if hi <= lo {
                continue;
            }
            let panels = panel_breaks(lo, hi, breaks.iter().copied());
            let mut failure = None;
            let v: T = rule.integrate_panels(&panels, |eps| {
                if failure.is_some() {
                    return T::zero();
                }
                match amplitudes(model, eps, backend) {
                    Ok(a) => {
                        let w = beta * (-beta * (eps - e[j])).exp();
                        w * (a.transmission[(jp, j)].norm_sqr() + a.reflection[(jp, j)].norm_sqr())
                    }
                    Err(err) => {
                        failure = Some(err);
                        T::zero()
                    }
                }
            });
            if let Some(err) = failure {
                return Err(err);
            }
            out[j * d + jp] = v;
        }
    }
    Ok(TransitionMatrix { dim: d, data: out })
}
