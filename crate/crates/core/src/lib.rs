//! Simulation of a spinor-condensate quantum rotor whose angular potential is
//! shaped by a driven optical cavity: effective potentials, split-operator
//! dynamics, squeezing protocols, noise ensembles and diagnostics.

// negated comparisons reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibration;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod model;
pub mod oracle;
pub mod protocol;
pub mod scenarios;
pub mod stochastic;

pub use error::{Result, RotorError};

/// Crate version, for run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Whether the rayon backend was compiled in.
pub const PARALLEL: bool = cfg!(feature = "parallel");
