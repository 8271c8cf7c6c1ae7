//! Analysis toolkit for three-qubit states whose entanglement cannot be
//! localized between any pair of qubits by measuring the third.
//!
//! The crate builds the two-parameter GHZ mixture family, certifies full
//! inseparability and (non)localizability through partial-transpose
//! eigenvalue certificates, extracts two-qubit entanglement with collective
//! CNOT-based operations, and reproduces the projective-tomography analysis
//! pipeline (count simulation, frequency mixing, maximum-likelihood
//! reconstruction, Monte Carlo error bars) on simulated or ingested data.
//!
//! Basis convention, normative everywhere: three-qubit basis labels are
//! |ABC> with qubit A the most significant bit, ordered |000>, |001>,
//! ..., |111>.

pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod localizability;
pub mod localization;
pub mod report;
pub mod rng;
pub mod states;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityMatrix, PureState};
pub use states::{BlochDirection, FamilyParams};
