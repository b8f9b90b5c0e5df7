//! Dense complex matrix and superoperator algebra for few-level systems.

mod density;
mod expm;
mod hermitian;
mod lu;
mod matrix;
mod superop;

pub use density::{DensityMatrix, POSITIVITY_TOLERANCE, TRACE_TOLERANCE};
pub use expm::expm;
pub use hermitian::{eig_hermitian, HermitianEigen, HermitianOperator, HERMITICITY_TOLERANCE};
pub use lu::{condition_one, solve, Lu};
pub use matrix::{pauli_x, pauli_y, pauli_z, ComplexMatrix};
pub use superop::{apply_superop, choi_matrix, compose, unitary_superop, Superoperator};
