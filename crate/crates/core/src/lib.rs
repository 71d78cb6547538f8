//! Causal disentanglement probing for audio generators.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod causal;
pub mod cli;
pub mod corpus;
pub mod detector;
pub mod error;
pub mod kv;
pub mod observables;
pub mod signal;
pub mod surrogate;
pub mod synthgen;

pub use error::{Error, Result};
