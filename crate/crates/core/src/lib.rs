//! Learner-state estimation from per-frame visual measurements.
//!
//! Eye closure gives alertness (PERCLOS over sliding windows), saccades give
//! attention, face texture gives emotion and head roll gives a frustration
//! cue. The per-window states drive a prioritised feedback policy.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod emotion;
pub mod error;
pub mod features;
pub mod fusion;
pub mod ocular;
pub mod session;
pub mod tracking;

pub use error::{Error, Result};
