//! Coherence, delocalization and entanglement of single-excitation states.
//!
//! A single excitation shared between two sites, two photons, or two degrees
//! of freedom of one photon is described by the same two-qubit density
//! matrix. This crate builds those matrices, computes their coherence,
//! delocalization and entanglement measures, and cross-checks the closed
//! forms against general-purpose two-qubit routines.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod optimize;
pub mod scenarios;
pub mod speclang;
pub mod states;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use measures::MeasureReport;
pub use states::{ScenarioBasis, SingleExcitationState};
