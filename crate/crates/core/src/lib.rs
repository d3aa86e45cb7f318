//! Sideband cooling of a mechanical resonator that hosts a two-level-system
//! defect, with periodic `σ_z` decoupling pulses on the defect.
//!
//! The resonator ⊗ TLS density matrix is evolved under a Lindblad master
//! equation, either in the dressed (polariton) basis of the Jaynes–Cummings
//! Hamiltonian or in the bare product basis, interleaved with instantaneous
//! `σ_z` conjugations. All frequencies are in units of the mechanical
//! frequency ω_m.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dissipation;
pub mod error;
pub mod oracle;
pub mod output;
pub mod params;
pub mod polariton;
pub mod propagator;
pub mod pulse;
pub mod scenario;
pub mod space;

pub use error::{Result, SimError};
pub use params::SystemParams;
