//! Simulation of decohering n-slit matter-wave interference.
//!
//! A particle (atom, molecule, photon — the "quanton") crosses an n-slit
//! array carrying an optional which-way detector and couples weakly to a
//! thermal bath of harmonic oscillators while it flies to the screen. Its
//! reduced density matrix obeys a quantum Brownian motion master equation
//! with friction coefficient `γ` and diffusion coefficient `D = 2mγk_BT`,
//! and the screen intensity admits a closed form whose pairwise interference
//! terms decay like `exp(-D(j-k)²ℓ²t/12ħ²)`.
//!
//! The crate provides:
//!
//! * [`model`] — physical configuration types, validation, presets, the
//!   `key=value` config-file reader, and nondimensionalization;
//! * [`engine`] — the exact closed-form screen intensity, its far-field
//!   (Fraunhofer) limit, and term-by-term decomposition;
//! * [`coherence`] — the normalized coherence measure computed three ways
//!   (slit-basis density matrix, analytic closed form, simulated two-mode
//!   intensity measurement) and decoherence-time inversion;
//! * [`oracle`] — a Strang-split spectral solver for the master equation,
//!   used as an independent numerical check of the closed forms.
//!
//! All types are immutable after construction and all operations are pure
//! functions, so everything is safe to use concurrently without locking.

// validity checks are written as `!(x > 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod constants;
pub mod engine;
pub mod error;
pub mod model;
pub mod oracle;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
