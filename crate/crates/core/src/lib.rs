//! Operator algebra, model Hamiltonians and Lindblad evolution for a qubit
//! coupled to a bosonic mode, optionally with a readout resonator.
//!
//! All frequencies are angular (rad/s), all times are seconds, and the qubit
//! convention is `σz|g⟩ = −|g⟩` with basis index 0 = |g⟩, 1 = |e⟩.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod error;
pub mod expm;
pub mod hamiltonian;
pub mod layout;
pub mod lindblad;
pub mod operator;
pub mod ops;
pub mod params;
pub mod series;
pub mod state;
pub mod transmon;

pub use error::{Error, Result};
pub use layout::HilbertLayout;
pub use num_complex::Complex64 as C64;
pub use operator::Operator;
pub use state::QuantumState;

/// 2π
pub const TAU: f64 = core::f64::consts::TAU;

/// Angular frequency for a frequency given in MHz.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Angular frequency for a frequency given in GHz.
#[inline]
pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e9
}
