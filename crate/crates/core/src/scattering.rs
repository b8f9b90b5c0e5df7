//! Collision Hamiltonian `p^2/2m + H_S + V f(x)` with `f` the indicator of a
//! barrier of length `L`, and its energy-dependent scattering amplitudes.
//!
//! Amplitudes are referenced to the barrier center: the transmitted wave in
//! channel `j'` is `s+_{j'j} e^{i k_{j'} x}` and the reflected one
//! `s-_{j'j} e^{-i k_{j'} x}` for unit flux incident in channel `j`, so that a
//! vanishing coupling yields `s+ = 1`, `s- = 0` exactly.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{pauli_x, pauli_y, ComplexMatrix, HermitianEigen, HermitianOperator, Lu};
use crate::num::{cis, cone, czero, Real};

/// System levels, coupling and barrier of a collision.
#[derive(Clone, Debug)]
pub struct ScatteringModel<T: Real> {
    energies: Vec<T>,
    coupling: HermitianOperator<T>,
    barrier_length: T,
    mass: T,
    hbar: T,
    total: HermitianEigen<T>,
    e_max: T,
}

impl<T: Real> ScatteringModel<T> {
    /// `energies` must be strictly ascending; `coupling` is expressed in the
    /// eigenbasis of `H_S` (index `j` has energy `energies[j]`).
    pub fn new(
        energies: Vec<T>,
        coupling: HermitianOperator<T>,
        barrier_length: T,
        mass: T,
        hbar: T,
    ) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidParameter("at least one level is required".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("level energies"));
        }
        if energies.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "energies must be strictly ascending (non-degenerate spectrum)".into(),
            ));
        }
        if coupling.dim() != energies.len() {
            return Err(Error::DimensionMismatch {
                expected: energies.len(),
                found: coupling.dim(),
            });
        }
        for (name, v) in [("barrier_length", barrier_length), ("mass", mass), ("hbar", hbar)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let h_s = HermitianOperator::from_real_diagonal(&energies);
        let total = h_s.add(&coupling)?.eig();
        let e_max = energies
            .last()
            .copied()
            .expect("non-empty")
            .max(total.max());
        Ok(Self {
            energies,
            coupling,
            barrier_length,
            mass,
            hbar,
            total,
            e_max,
        })
    }

    /// Qubit with levels `-delta/2 < +delta/2` and `V = lambda (sigma_x + sigma_y)`
    /// written in that ascending eigenbasis.
    pub fn qubit(delta: T, lambda: T, barrier_length: T, mass: T, hbar: T) -> Result<Self> {
        if !(delta > T::zero()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let half = delta * T::lit(0.5);
        let v = (&pauli_x::<T>() + &pauli_y::<T>()).scale_real(lambda);
        Self::new(vec![-half, half], HermitianOperator::new(v)?, barrier_length, mass, hbar)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn coupling(&self) -> &HermitianOperator<T> {
        &self.coupling
    }

    pub fn barrier_length(&self) -> T {
        self.barrier_length
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    /// Spectrum and eigenvectors of `H_S + V`.
    pub fn total_eigen(&self) -> &HermitianEigen<T> {
        &self.total
    }

    /// Largest eigenvalue of `H_S` and of `H_S + V`.
    pub fn e_max(&self) -> T {
        self.e_max
    }

    /// `e_j - e_k`
    #[inline]
    pub fn bohr(&self, j: usize, k: usize) -> T {
        self.energies[j] - self.energies[k]
    }

    fn wavevector_sq(&self, kinetic: T) -> T {
        T::lit(2.0) * self.mass * kinetic / (self.hbar * self.hbar)
    }
}

/// Which amplitude approximation to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    /// High-energy approximation without reflection.
    Approximate,
    /// Multichannel square-barrier matching.
    Exact,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Approximate => "approx",
            Backend::Exact => "exact",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approx" | "approximate" => Ok(Backend::Approximate),
            "exact" => Ok(Backend::Exact),
            other => Err(Error::InvalidParameter(format!(
                "unknown backend '{other}' (expected approx|exact)"
            ))),
        }
    }
}

/// Transmission and reflection amplitudes at one total energy.
#[derive(Clone, Debug)]
pub struct AmplitudeSet<T: Real> {
    pub energy: T,
    /// `s+_{j'j}` at row `j'`, column `j`.
    pub transmission: ComplexMatrix<T>,
    pub reflection: ComplexMatrix<T>,
    pub open_channels: Vec<bool>,
}

impl<T: Real> AmplitudeSet<T> {
    /// `s^{(alpha)}_{j'j}` with `alpha = +1` transmission, `-1` reflection.
    #[inline]
    pub fn get(&self, transmitted: bool, jp: usize, j: usize) -> Complex<T> {
        if transmitted {
            self.transmission[(jp, j)]
        } else {
            self.reflection[(jp, j)]
        }
    }

    /// `max |sum_alpha s^dagger s - I|` restricted to open channels.
    pub fn unitarity_defect(&self) -> T {
        unitarity_defect(self)
    }

    /// `max | |s_{j'j}|^2 - |s_{jj'}|^2 |`
    pub fn microrev_defect(&self) -> T {
        microrev_defect(self)
    }

    /// `max |s_{j'j} - s_{jj'}|`, measured but not expected to vanish when the
    /// coupling is not real.
    pub fn phase_microrev_defect(&self) -> T {
        let d = self.transmission.dim();
        let mut m = T::zero();
        for s in [&self.transmission, &self.reflection] {
            for j in 0..d {
                for jp in 0..d {
                    m = m.max((s[(jp, j)] - s[(j, jp)]).norm());
                }
            }
        }
        m
    }
}

pub fn unitarity_defect<T: Real>(amps: &AmplitudeSet<T>) -> T {
    let d = amps.transmission.dim();
    let open: Vec<usize> = (0..d).filter(|&j| amps.open_channels[j]).collect();
    let mut defect = T::zero();
    for &j in &open {
        for &k in &open {
            let mut acc = czero::<T>();
            for &jp in &open {
                acc = acc
                    + amps.transmission[(jp, j)].conj() * amps.transmission[(jp, k)]
                    + amps.reflection[(jp, j)].conj() * amps.reflection[(jp, k)];
            }
            let target = if j == k { cone() } else { czero() };
            defect = defect.max((acc - target).norm());
        }
    }
    defect
}

pub fn microrev_defect<T: Real>(amps: &AmplitudeSet<T>) -> T {
    let d = amps.transmission.dim();
    let mut m = T::zero();
    for s in [&amps.transmission, &amps.reflection] {
        for j in 0..d {
            for jp in 0..d {
                m = m.max((s[(jp, j)].norm_sqr() - s[(j, jp)].norm_sqr()).abs());
            }
        }
    }
    m
}

/// `k_j = sqrt(2 m (E - e_j)) / hbar`; closed channels are a domain error.
pub fn channel_wavevector<T: Real>(model: &ScatteringModel<T>, energy: T, j: usize) -> Result<T> {
    let kinetic = energy - model.energies[j];
    if kinetic < T::zero() {
        return Err(Error::ClosedChannel {
            channel: j,
            energy: energy.as_f64(),
        });
    }
    Ok(model.wavevector_sq(kinetic).sqrt())
}

/// High-energy amplitudes: identity below `e_max`, otherwise
/// `s+_{j'j} = exp(-i L (k_{j'} + k_j) / 2) <j'| exp(i L K(E)) |j>` with
/// `K(E) = sqrt(2 m (E - H_S - V)) / hbar`; reflection neglected.
pub fn approx_amplitudes<T: Real>(model: &ScatteringModel<T>, energy: T) -> AmplitudeSet<T> {
    let d = model.dim();
    let open_channels = model.energies.iter().map(|&e| energy >= e).collect();
    let reflection = ComplexMatrix::zeros(d);
    if energy < model.e_max {
        return AmplitudeSet {
            energy,
            transmission: ComplexMatrix::identity(d),
            reflection,
            open_channels,
        };
    }
    let l = model.barrier_length;
    let propagator = model
        .total
        .apply(|lam| cis(l * model.wavevector_sq((energy - lam).max(T::zero())).sqrt()))
        .expect("finite phases above e_max");
    let k: Vec<T> = model
        .energies
        .iter()
        .map(|&e| model.wavevector_sq((energy - e).max(T::zero())).sqrt())
        .collect();
    let half = T::lit(0.5);
    let transmission =
        ComplexMatrix::from_fn(d, |jp, j| cis(-l * (k[jp] + k[j]) * half) * propagator[(jp, j)]);
    AmplitudeSet {
        energy,
        transmission,
        reflection,
        open_channels,
    }
}

/// `(cos(q x), sin(q x)/q)` as analytic functions of `q^2`, switching to
/// `(cosh, sinh/kappa)` when `q^2 < 0`.
fn even_odd_modes<T: Real>(q2: T, x: T) -> (T, T) {
    let z = q2 * x * x;
    if z.abs() < T::lit(1e-3) {
        let c = T::one() - z / T::lit(2.0) + z * z / T::lit(24.0) - z * z * z / T::lit(720.0)
            + z * z * z * z / T::lit(40320.0);
        let s = x
            * (T::one() - z / T::lit(6.0) + z * z / T::lit(120.0) - z * z * z / T::lit(5040.0)
                + z * z * z * z / T::lit(362880.0));
        (c, s)
    } else if q2 > T::zero() {
        let q = q2.sqrt();
        ((q * x).cos(), (q * x).sin() / q)
    } else {
        let kappa = (-q2).sqrt();
        ((kappa * x).cosh(), (kappa * x).sinh() / kappa)
    }
}

/// Exact amplitudes from wavefunction and derivative matching at both barrier
/// edges, with flux normalization `sqrt(k_{j'} / k_j)`.
///
/// Unknowns per incident channel are the reflected and transmitted
/// amplitudes in every channel plus the even/odd coefficients of every
/// internal mode of `H_S + V`, giving a `4d x 4d` system. Closed outer
/// channels carry evanescent tails; closed incident channels yield zero columns.
pub fn exact_amplitudes<T: Real>(model: &ScatteringModel<T>, energy: T) -> Result<AmplitudeSet<T>> {
    let d = model.dim();
    if !(energy > model.energies[0]) {
        return Err(Error::Domain(format!(
            "energy {energy} leaves every channel closed (lowest level {})",
            model.energies[0]
        )));
    }
    let h = model.barrier_length * T::lit(0.5);
    let i = Complex::new(T::zero(), T::one());
    let open: Vec<bool> = model.energies.iter().map(|&e| energy > e).collect();
    // Signed outer wavevectors: k > 0 when open, kappa > 0 when closed.
    let outer: Vec<T> = model
        .energies
        .iter()
        .map(|&e| model.wavevector_sq((energy - e).abs()).sqrt())
        .collect();
    let u = &model.total.vectors;
    let modes: Vec<(T, T, T)> = model
        .total
        .values
        .iter()
        .map(|&eps| {
            let q2 = model.wavevector_sq(energy - eps);
            let (c, s) = even_odd_modes(q2, h);
            (q2, c, s)
        })
        .collect();

    let n = 4 * d;
    let mut a = ComplexMatrix::<T>::zeros(n);
    let (r_off, t_off, a_off, b_off) = (0, d, 2 * d, 3 * d);
    for ch in 0..d {
        let (g, dg, gr, dgr) = if open[ch] {
            let k = outer[ch];
            let ph = cis(k * h);
            (ph, -i * k * ph, ph, i * k * ph)
        } else {
            let kappa = outer[ch];
            let one = cone();
            (one, Complex::new(kappa, T::zero()), one, Complex::new(-kappa, T::zero()))
        };
        let (row0, row1, row2, row3) = (ch, d + ch, 2 * d + ch, 3 * d + ch);
        a[(row0, r_off + ch)] = g;
        a[(row1, r_off + ch)] = dg;
        a[(row2, t_off + ch)] = gr;
        a[(row3, t_off + ch)] = dgr;
        for (m, &(q2, c, s)) in modes.iter().enumerate() {
            let w = u[(ch, m)];
            // left edge x = -h: C(-h) = c, S(-h) = -s, C'(-h) = q2 s, S'(-h) = c
            a[(row0, a_off + m)] = -w * c;
            a[(row0, b_off + m)] = w * s;
            a[(row1, a_off + m)] = -w * (q2 * s);
            a[(row1, b_off + m)] = -w * c;
            // right edge x = +h: C = c, S = s, C' = -q2 s, S' = c
            a[(row2, a_off + m)] = -w * c;
            a[(row2, b_off + m)] = -w * s;
            a[(row3, a_off + m)] = w * (q2 * s);
            a[(row3, b_off + m)] = -w * c;
        }
    }
    let lu = Lu::factor(&a).map_err(|e| Error::Scattering {
        energy: energy.as_f64(),
        reason: e.to_string(),
    })?;

    let mut transmission = ComplexMatrix::zeros(d);
    let mut reflection = ComplexMatrix::zeros(d);
    for j in (0..d).filter(|&j| open[j]) {
        let kj = outer[j];
        let inc = cis(-kj * h);
        let mut rhs = vec![czero::<T>(); n];
        rhs[j] = -inc;
        rhs[d + j] = -(i * kj * inc);
        let x = lu.solve(&rhs).map_err(|e| Error::Scattering {
            energy: energy.as_f64(),
            reason: e.to_string(),
        })?;
        for jp in (0..d).filter(|&jp| open[jp]) {
            let flux = (outer[jp] / kj).sqrt();
            transmission[(jp, j)] = x[t_off + jp] * flux;
            reflection[(jp, j)] = x[r_off + jp] * flux;
        }
    }
    Ok(AmplitudeSet {
        energy,
        transmission,
        reflection,
        open_channels: open,
    })
}

pub fn amplitudes<T: Real>(
    model: &ScatteringModel<T>,
    energy: T,
    backend: Backend,
) -> Result<AmplitudeSet<T>> {
    match backend {
        Backend::Approximate => Ok(approx_amplitudes(model, energy)),
        Backend::Exact => exact_amplitudes(model, energy),
    }
}

/// Energies at which the backend's amplitudes are not smooth.
pub fn backend_breakpoints<T: Real>(model: &ScatteringModel<T>, backend: Backend) -> Vec<T> {
    match backend {
        Backend::Approximate => vec![model.e_max],
        Backend::Exact => model.energies.clone(),
    }
}

/// `count` energies from (just above) `e_max` to `e_max + 20 / beta`, with
/// logarithmically spaced offsets spanning six decades.
pub fn diagnostic_energy_grid<T: Real>(model: &ScatteringModel<T>, beta: T, count: usize) -> Vec<T> {
    let span = T::lit(20.0) / beta;
    if count == 1 {
        return vec![model.e_max + span];
    }
    let last = T::from_usize_lossy(count - 1);
    (0..count)
        .map(|i| {
            let frac = T::from_usize_lossy(i) / last;
            model.e_max + span * T::lit(10.0).powf(T::lit(-6.0) * (T::one() - frac))
        })
        .collect()
}

/// Defect summary of a backend over an energy grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AmplitudeDiagnostics {
    pub max_unitarity_defect: f64,
    pub max_microrev_defect: f64,
    pub max_phase_microrev_defect: f64,
}

pub fn amplitude_diagnostics<T: Real>(
    model: &ScatteringModel<T>,
    backend: Backend,
    grid: &[T],
) -> Result<AmplitudeDiagnostics> {
    let mut out = AmplitudeDiagnostics::default();
    for &e in grid {
        let a = amplitudes(model, e, backend)?;
        out.max_unitarity_defect = out.max_unitarity_defect.max(a.unitarity_defect().as_f64());
        out.max_microrev_defect = out.max_microrev_defect.max(a.microrev_defect().as_f64());
        out.max_phase_microrev_defect =
            out.max_phase_microrev_defect.max(a.phase_microrev_defect().as_f64());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_model() -> ScatteringModel<f64> {
        ScatteringModel::qubit(0.6, 1.0, 1.0, 0.1, 1.0).unwrap()
    }

    fn free_model() -> ScatteringModel<f64> {
        ScatteringModel::qubit(0.6, 0.0, 1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn wavevector_threshold_and_scaling() {
        let m = paper_model();
        assert_eq!(channel_wavevector(&m, -0.3, 0).unwrap(), 0.0);
        let k = channel_wavevector(&m, 2.0, 0).unwrap();
        assert!((k - 0.678_232_998_312_526_8).abs() < 1e-15);
        let k2 = channel_wavevector(&m, -0.3 + 2.0 * 2.3, 0).unwrap();
        assert!((k2 / k - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            channel_wavevector(&m, 0.0, 1),
            Err(Error::ClosedChannel { channel: 1, .. })
        ));
    }

    #[test]
    fn e_max_includes_total_hamiltonian() {
        assert!((paper_model().e_max() - 1.445_683_229_480_096).abs() < 1e-14);
        assert_eq!(free_model().e_max(), 0.3);
    }

    #[test]
    fn approx_is_identity_below_e_max() {
        let a = approx_amplitudes(&paper_model(), 0.2);
        assert_eq!(a.transmission, ComplexMatrix::identity(2));
        assert_eq!(a.reflection, ComplexMatrix::zeros(2));
    }

    #[test]
    fn approx_free_channels_are_identity() {
        for e in [0.3, 1.0, 17.0] {
            let a = approx_amplitudes(&free_model(), e);
            assert!(a.transmission.max_abs_diff(&ComplexMatrix::identity(2)).unwrap() < 1e-14);
        }
    }

    #[test]
    fn approx_unitary_above_e_max() {
        let m = paper_model();
        for e in diagnostic_energy_grid(&m, 0.1, 100) {
            let a = approx_amplitudes(&m, e);
            assert!(a.unitarity_defect() <= 1e-12, "E = {e}: {}", a.unitarity_defect());
            assert!(a.microrev_defect() <= 1e-12);
        }
    }

    #[test]
    fn exact_free_channels_decouple() {
        let m = free_model();
        for e in [0.0, 0.5, 3.0] {
            let a = exact_amplitudes(&m, e).unwrap();
            for j in 0..2 {
                if a.open_channels[j] {
                    assert!((a.transmission[(j, j)].norm() - 1.0).abs() < 1e-12);
                }
            }
            assert!(a.transmission[(0, 1)].norm() < 1e-12);
            assert!(a.transmission[(1, 0)].norm() < 1e-12);
            assert!(a.reflection.max_abs() < 1e-12);
        }
    }

    #[test]
    fn exact_flux_conservation_and_microrev() {
        let m = paper_model();
        for e in diagnostic_energy_grid(&m, 0.1, 100) {
            let a = exact_amplitudes(&m, e).unwrap();
            assert!(a.unitarity_defect() <= 1e-10, "E = {e}: {}", a.unitarity_defect());
            assert!(a.microrev_defect() <= 1e-10);
        }
        // below e_max, including the single-open-channel window
        for e in [-0.2, 0.0, 0.29, 0.31, 1.0] {
            let a = exact_amplitudes(&m, e).unwrap();
            assert!(a.unitarity_defect() <= 1e-10, "E = {e}");
            assert!(a.microrev_defect() <= 1e-10);
        }
    }

    #[test]
    fn exact_rejects_all_closed() {
        assert!(matches!(exact_amplitudes(&paper_model(), -0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn backends_agree_at_high_energy() {
        let m = paper_model();
        let e = m.e_max() + 10.0 / 0.1;
        let a = approx_amplitudes(&m, e);
        let b = exact_amplitudes(&m, e).unwrap();
        for j in 0..2 {
            for jp in 0..2 {
                let diff = (a.transmission[(jp, j)].norm() - b.transmission[(jp, j)].norm()).abs();
                assert!(diff < 0.05, "{jp}{j}: {diff}");
            }
        }
    }

    #[test]
    fn rejects_degenerate_levels() {
        let v = HermitianOperator::zeros(2);
        assert!(ScatteringModel::new(vec![0.1, 0.1], v, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn backend_parses() {
        assert_eq!("approx".parse::<Backend>().unwrap(), Backend::Approximate);
        assert_eq!("exact".parse::<Backend>().unwrap(), Backend::Exact);
        assert!("other".parse::<Backend>().is_err());
    }
}
