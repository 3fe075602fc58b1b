//! Human-level actuation scoring for robot joints: per-pair feature
//! extraction from maps and logs, the human-equivalence envelope, weighted
//! aggregation with guardrails, and preregistered, digest-bound inputs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod cli;
pub mod config_io;
pub mod envelope;
pub mod error;
pub mod human_ref;
pub mod numeric;
pub mod scoring;
pub mod signals;
pub mod synthetic;

pub use error::{Error, Result};
