//! Quasi-stationary distributions by self-interacting absorbed diffusions,
//! plus exact finite-state tools for the Green operator.
//!
//! - [`diffusion`]: Euler–Maruyama paths killed on leaving a domain.
//! - [`reinforced`]: the process restarted from its own occupation measure.
//! - [`green_lab`]: absorbing chains, spectral data and bound verifiers.
//! - [`benchmarks`]: reference QSDs and the KS distance.

pub mod benchmarks;
pub mod diffusion;
pub mod error;
pub mod green_lab;
pub mod linalg;
pub mod quadrature;
pub mod reinforced;
pub mod rng;

pub use error::{Error, Result};
