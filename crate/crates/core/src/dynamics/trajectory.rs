use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, Superoperator};
use crate::num::Real;

/// Parameters of a single Poissonian collision trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySpec<T: Real> {
    /// Mean collision rate.
    pub gamma: T,
    pub t_max: T,
    /// Spacing of the recorded sample grid `0, dt, 2 dt, ... <= t_max`.
    pub sample_dt: T,
    pub seed: u64,
    /// ChaCha stream; ensembles use the trajectory index.
    pub stream: u64,
    /// Rescale the trace to one after every collision.
    pub renormalize: bool,
}

impl<T: Real> TrajectorySpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= T::zero() && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if !(self.t_max >= T::zero() && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be non-negative, got {}", self.t_max)));
        }
        if !(self.sample_dt > T::zero() && self.sample_dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample_dt must be positive, got {}", self.sample_dt)));
        }
        Ok(())
    }

    /// The sample grid `k dt` for `k = 0..=floor(t_max / dt)`.
    pub fn sample_grid(&self) -> Vec<T> {
        let ratio = self.t_max / self.sample_dt;
        let n = (ratio + T::lit(1e-9) * ratio.max(T::one())).floor().to_usize().unwrap_or(0);
        (0..=n).map(|k| T::from_usize_lossy(k) * self.sample_dt).collect()
    }
}

/// One sampled trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord<T: Real> {
    /// Grid times merged with the collision times, ascending.
    pub times: Vec<T>,
    /// State at each entry of `times`; at a collision time it is the
    /// post-collision state.
    pub states: Vec<DensityMatrix<T>>,
    /// Collisions that have happened up to and including each time.
    pub collisions_so_far: Vec<usize>,
    /// Whether the corresponding entry is a collision event.
    pub is_collision: Vec<bool>,
    pub collision_times: Vec<T>,
    pub seed: u64,
    pub stream: u64,
}

struct Walker<'a, T: Real> {
    map: &'a Superoperator<T>,
    omega: Vec<T>,
    rng: ChaCha8Rng,
    gamma: T,
    renormalize: bool,
    state: ComplexMatrix<T>,
    t: T,
    next_collision: T,
    collisions: usize,
}

impl<'a, T: Real> Walker<'a, T> {
    fn new(
        map: &'a Superoperator<T>,
        energies: &[T],
        hbar: T,
        gamma: T,
        seed: u64,
        stream: u64,
        renormalize: bool,
        rho0: &DensityMatrix<T>,
    ) -> Result<Self> {
        let d = map.dim();
        if energies.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: energies.len() });
        }
        if rho0.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: rho0.dim() });
        }
        if !(hbar > T::zero()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let omega = energies.iter().map(|&e| e / hbar).collect();
        let mut w = Walker {
            map,
            omega,
            rng,
            gamma,
            renormalize,
            state: rho0.matrix().clone(),
            t: T::zero(),
            next_collision: T::infinity(),
            collisions: 0,
        };
        w.next_collision = w.draw_wait();
        Ok(w)
    }

    fn draw_wait(&mut self) -> T {
        if self.gamma == T::zero() {
            return T::infinity();
        }
        let u: f64 = self.rng.gen();
        T::lit(-(1.0 - u).ln()) / self.gamma
    }

    fn free_evolve(&mut self, until: T) {
        let tau = until - self.t;
        if tau > T::zero() {
            let d = self.state.dim();
            for j in 0..d {
                for k in 0..d {
                    if j != k {
                        let phase = Complex::from_polar(T::one(), -(self.omega[j] - self.omega[k]) * tau);
                        self.state[(j, k)] *= phase;
                    }
                }
            }
        }
        self.t = until;
    }

    fn collide(&mut self) -> Result<()> {
        let mut next = self.map.apply(&self.state)?;
        if !next.is_finite() {
            return Err(Error::NonFinite("post-collision state"));
        }
        if self.renormalize {
            let tr = next.trace().re;
            if tr > T::zero() {
                next = next.scale_real(T::one() / tr);
            }
        }
        self.state = next.hermitian_part();
        self.collisions += 1;
        let wait = self.draw_wait();
        self.next_collision = self.t + wait;
        Ok(())
    }

    /// Advance to `target`, applying every collision at or before it.
    /// `on_collision` sees the time and post-collision state.
    fn advance(&mut self, target: T, mut on_collision: impl FnMut(T, &ComplexMatrix<T>, usize)) -> Result<()> {
        while self.next_collision <= target {
            let tc = self.next_collision;
            self.free_evolve(tc);
            self.collide()?;
            on_collision(tc, &self.state, self.collisions);
        }
        self.free_evolve(target);
        Ok(())
    }
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    let mut prev = T::zero();
    for &t in times {
        if !(t >= prev && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "observation times must be finite, non-negative and ascending (got {t} after {prev})"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// Sample one trajectory: exponential waiting times at rate `gamma`, the
/// collision map applied at each event and unitary free evolution in between.
pub fn sample_trajectory<T: Real>(
    map: &Superoperator<T>,
    energies: &[T],
    hbar: T,
    spec: &TrajectorySpec<T>,
    rho0: &DensityMatrix<T>,
) -> Result<TrajectoryRecord<T>> {
    spec.validate()?;
    let mut w = Walker::new(map, energies, hbar, spec.gamma, spec.seed, spec.stream, spec.renormalize, rho0)?;
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        states: Vec::new(),
        collisions_so_far: Vec::new(),
        is_collision: Vec::new(),
        collision_times: Vec::new(),
        seed: spec.seed,
        stream: spec.stream,
    };
    for g in spec.sample_grid() {
        w.advance(g, |tc, s, n| {
            rec.times.push(tc);
            rec.states.push(DensityMatrix::from_evolved(s));
            rec.collisions_so_far.push(n);
            rec.is_collision.push(true);
            rec.collision_times.push(tc);
        })?;
        rec.times.push(g);
        rec.states.push(DensityMatrix::from_evolved(&w.state));
        rec.collisions_so_far.push(w.collisions);
        rec.is_collision.push(false);
    }
    Ok(rec)
}

/// States of one trajectory at the given ascending times, together with
/// the number of collisions so far. Uses the same random sequence as
/// [`sample_trajectory`] for equal seed and stream.
pub fn observe_trajectory<T: Real>(
    map: &Superoperator<T>,
    energies: &[T],
    hbar: T,
    gamma: T,
    seed: u64,
    stream: u64,
    renormalize: bool,
    rho0: &DensityMatrix<T>,
    times: &[T],
) -> Result<Vec<(ComplexMatrix<T>, usize)>> {
    check_times(times)?;
    let mut w = Walker::new(map, energies, hbar, gamma, seed, stream, renormalize, rho0)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        w.advance(t, |_, _, _| {})?;
        out.push((w.state.clone(), w.collisions));
    }
    Ok(out)
}

/// Trajectory-averaged state with standard errors.
#[derive(Clone, Debug)]
pub struct EnsembleStats<T: Real> {
    pub times: Vec<T>,
    pub mean: Vec<ComplexMatrix<T>>,
    /// Standard error of the mean, entrywise: the real part holds the
    /// error of `Re rho_jk`, the imaginary part that of `Im rho_jk`.
    pub std_error: Vec<ComplexMatrix<T>>,
    pub mean_collisions: Vec<T>,
    pub trajectories: usize,
}

/// Average `count` trajectories with streams `0..count` of `seed`.
///
/// Trajectories run in parallel; the reduction is sequential in index
/// order, so the result does not depend on the thread count.
pub fn ensemble_mean<T: Real>(
    map: &Superoperator<T>,
    energies: &[T],
    hbar: T,
    gamma: T,
    seed: u64,
    renormalize: bool,
    rho0: &DensityMatrix<T>,
    times: &[T],
    count: usize,
) -> Result<EnsembleStats<T>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!("ensemble needs at least 2 trajectories, got {count}")));
    }
    check_times(times)?;
    let runs: Vec<Vec<(ComplexMatrix<T>, usize)>> = (0..count as u64)
        .into_par_iter()
        .map(|i| observe_trajectory(map, energies, hbar, gamma, seed, i, renormalize, rho0, times))
        .collect::<Result<_>>()?;

    let d = map.dim();
    let nt = times.len();
    let n = T::from_usize_lossy(count);
    let mut mean = vec![ComplexMatrix::zeros(d); nt];
    let mut mean_collisions = vec![T::zero(); nt];
    for run in &runs {
        for (ti, (s, c)) in run.iter().enumerate() {
            mean[ti] = &mean[ti] + s;
            mean_collisions[ti] += T::from_usize_lossy(*c);
        }
    }
    for ti in 0..nt {
        mean[ti] = mean[ti].scale_real(T::one() / n);
        mean_collisions[ti] /= n;
    }
    let mut var = vec![ComplexMatrix::zeros(d); nt];
    for run in &runs {
        for (ti, (s, _)) in run.iter().enumerate() {
            for (acc, (x, m)) in var[ti].as_mut_slice().iter_mut().zip(s.as_slice().iter().zip(mean[ti].as_slice())) {
                let dv = x - m;
                acc.re += dv.re * dv.re;
                acc.im += dv.im * dv.im;
            }
        }
    }
    let std_error = var
        .into_iter()
        .map(|v| {
            let norm = n * (n - T::one());
            let data: Vec<Complex<T>> = v.into_vec().into_iter().map(|z: Complex<T>| Complex::new((z.re / norm).sqrt(), (z.im / norm).sqrt())).collect();
            ComplexMatrix::from_row_major(d, data).expect("square data")
        })
        .collect();
    Ok(EnsembleStats { times: times.to_vec(), mean, std_error, mean_collisions, trajectories: count })
}
