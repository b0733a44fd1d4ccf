//! Coherent-energy fluctuation theorems for finite quantum systems.
//!
//! - [`linalg`]: dense complex matrices and a Hermitian eigensolver.
//! - [`quantum`]: Hamiltonians, density matrices, unitaries, qubit rotations,
//!   waveplates and Bloch vectors.
//! - [`energy`]: work / heat / coherent-energy bookkeeping along trajectories.
//! - [`tpm`]: exact two-point-measurement distributions, characteristic
//!   functions, integral and detailed fluctuation relations.
//! - [`photonic`]: Monte-Carlo emulation of the entangled-photon experiment
//!   with Poisson counting and bootstrap error bars.
//! - [`arrow`]: qubit closed forms for the mean coherent energy.

pub mod arrow;
pub mod energy;
pub mod error;
pub mod linalg;
pub mod photonic;
pub mod quantum;
pub mod tpm;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use num_complex::Complex64;
pub use quantum::{BlochVector, DensityMatrix, Hamiltonian, UnitaryOperator};
pub use tpm::TpmDistribution;
