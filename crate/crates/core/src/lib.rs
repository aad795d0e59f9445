//! Numerical core for a single-mode field coupled to a Kerr-nonlinear medium.
//!
//! The two-mode Hamiltonian
//!
//! ```text
//! H = ω a†a + ω₀ b†b + γ b†²b² + g (a†b + b†a)        (ħ = 1)
//! ```
//!
//! conserves the total excitation number `a†a + b†b`, so it is diagonalized one
//! number sector at a time ([`model`]). Initial product states ([`states`]) are
//! propagated spectrally and reduced to observable time series ([`evolve`]),
//! which are then fed through the analysis chain: power spectrum, delay
//! embedding and maximal Lyapunov exponent ([`tsa`]), and coarse-grained
//! recurrence statistics ([`recurrence`]). [`classical`] integrates the
//! classical limit of the same model for contrast.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, configuration and the
//! command-line driver live in the companion `kerr-ergo` crate.

#![no_std]
#![warn(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classical;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod kdtree;
pub mod linalg;
pub mod model;
pub mod recurrence;
pub mod special;
pub mod states;
pub mod stats;
pub mod sum;
pub mod tsa;

pub use error::{Error, Result};
pub use evolve::{ObservableSet, Propagator, TimeSeries};
pub use model::{ModelParams, SectorBlock};
pub use states::{QuantumState, StateKind, StateSpec};

/// Complex amplitude type used for state coefficients.
pub type C64 = num_complex::Complex64;
