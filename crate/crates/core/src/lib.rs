//! Simulation suite for OFDM links impaired by oscillator phase noise.
//!
//! The crate is organized bottom-up:
//!
//! - [`phn`]: AR(1) phase-noise statistics, sequence generation and
//!   common-phase-error analysis.
//! - [`qam`]: Gray-mapped square QAM expressed as a multilinear function of
//!   bit means, its moments and derivatives, and an exact soft demapper.
//! - [`channel`]: unitary DFT helpers, Rayleigh channels and the
//!   impairment forward model.
//! - [`vi`]: the bit-level variational detector, its free energy, gradient
//!   checks and an exact enumeration posterior for small instances.
//! - [`fec`]: alist I/O, systematic LDPC encoding, sum-product decoding and
//!   interleaving.
//! - [`turbo`]: frame generation and the turbo / one-pass / baseline
//!   receivers.
//! - [`sim`]: Monte Carlo sweeps, CSV and plot output, CPE analysis.

pub mod bits;
pub mod channel;
pub mod error;
pub mod fec;
pub mod parallel;
pub mod phn;
pub mod qam;
pub mod seed;
pub mod sim;
pub mod turbo;
pub mod vi;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;
