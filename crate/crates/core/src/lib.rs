//! Sequential Monte Carlo ABC with marginal-summary localisation.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod distance;
pub mod error;
pub mod experiment;
pub mod io;
pub mod localize;
pub mod models;
pub mod reference;
pub mod rng;
pub mod smc;
pub mod special;
pub mod stats;
pub mod summaries;
pub mod types;

pub use error::{Error, Result};
