//! Bayesian active learning for two-class stress detection on windowed
//! physiological signals.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: a fixed four-layer Conv1D network with hand-written backward
//!   passes, inverted dropout, Adam and a compact binary model format.
//! - [`bayes`]: MC-dropout predictive distributions built from `T`
//!   stochastic forward passes.
//! - [`acquisition`]: max-entropy, BALD, variation-ratio and random scores
//!   plus pool ranking.
//! - [`data`]: NDJSON datasets, raw-stream windowing, z-scoring and a
//!   synthetic heart-rate / skin-conductance generator.
//! - [`al`]: the budgeted query-and-retrain loop, evaluation and η sweeps.
//! - [`bench`]: latency, training-time and model-size measurements.

pub mod acquisition;
pub mod al;
pub mod bayes;
pub mod bench;
pub mod data;
mod error;
pub mod nn;
pub mod rng;
mod window;

pub use error::{Error, Result};
pub use window::Window;
