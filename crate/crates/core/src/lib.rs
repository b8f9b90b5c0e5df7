//! Collisional reservoirs for few-level quantum systems.
//!
//! A system with Hamiltonian `H_S` is bombarded by particles drawn from an
//! effusive thermal source. Each collision acts through a scattering map
//! built from multichannel square-barrier amplitudes and the incident
//! particle's momentum-space density matrix. Between collisions, which
//! arrive as a Poisson process, the system evolves freely.
//!
//! The crate provides:
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigendecomposition,
//!   superoperators and Choi matrices.
//! - [`scattering`]: the collision Hamiltonian and its approximate and
//!   exact scattering amplitudes.
//! - [`collision`]: the scattering map, detailed-balance checks and the
//!   energy-representation transition probabilities.
//! - [`dynamics`]: dephased concatenation, Poissonian trajectories, the
//!   master-equation generator, steady states and their small-rate expansion.
//!
//! Everything is generic over the scalar type through [`Real`]; the
//! `*64` aliases below fix it to `f64`, which is what the tolerances are
//! calibrated for.
//!
//! Matrix entries are indexed in the `H_S` eigenbasis with ascending
//! energies. Vectorized states use `a = j * d + k` for `rho[(j, k)]`.

pub mod collision;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod num;
pub mod quadrature;
pub mod scattering;

pub use error::{Error, Result};
pub use num::Real;

pub use num_complex::Complex;

pub type Complex64 = Complex<f64>;
pub type ComplexMatrix64 = linalg::ComplexMatrix<f64>;
pub type HermitianOperator64 = linalg::HermitianOperator<f64>;
pub type DensityMatrix64 = linalg::DensityMatrix<f64>;
pub type Superoperator64 = linalg::Superoperator<f64>;
pub type ScatteringModel64 = scattering::ScatteringModel<f64>;
pub type AmplitudeSet64 = scattering::AmplitudeSet<f64>;
pub type ParticleDensity64 = collision::ParticleDensity<f64>;
pub type CollisionMap64 = collision::CollisionMap<f64>;
pub type Liouvillian64 = dynamics::Liouvillian<f64>;
pub type TrajectoryRecord64 = dynamics::TrajectoryRecord<f64>;
