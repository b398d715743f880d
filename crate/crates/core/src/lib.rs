//! Simulation library for a flux-coupled fluxonium qubit and a mechanical
//! resonator.
//!
//! All Hamiltonians are expressed in Hz (energy divided by Planck's
//! constant). Rates are given as `Γ/2π` in Hz and converted to angular units
//! inside the propagators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod fluxonium;
pub mod hybrid;
pub mod numerics;
pub mod semiclassical;
pub mod trace;

pub use error::{Error, Result};
pub use numerics::linalg::{CMatrix, CVector, EigenSystem};
pub use trace::SpectrumTrace;

/// Two-pi, used at every Hz <-> rad/s boundary.
pub const TAU: f64 = std::f64::consts::TAU;
