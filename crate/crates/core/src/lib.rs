//! Gaussian-wavepacket model of single-photon generation from a
//! Lambda-type atom in a one-sided cavity.
//!
//! - [`params`]: rates, pulse, detunings and the physical cavity description.
//! - [`analytic`]: closed-form populations and success-probability bounds.
//! - [`drive`]: synthesis of the control field that emits the target photon.
//! - [`simulate`]: forward integration of the amplitude equations.
//! - [`optimize`]: external-coupling optimization and parameter sweeps.
//! - [`verify`]: drive-to-simulation round-trip checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod drive;
pub mod error;
pub mod io;
pub mod numerics;
pub mod optimize;
pub mod params;
pub mod simulate;
pub mod verify;
pub mod waveform;

pub use error::{Error, Result};
pub use params::{AtomCavityParams, Detunings, PhysicalCavity, PulseSpec, Regime};
