//! Batch front end: JSON configs in, CSV/JSON artifacts and a hashed
//! manifest out.

// negated comparisons reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod state_io;
