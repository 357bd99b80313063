//! Explainable deep networks.
//!
//! Every input passes through its own single-weight, bias-free unit before
//! reaching an ordinary dense stack. After training, the magnitudes of those
//! per-input weights rank the inputs by importance.
//!
//! - [`numerics`]: dense matrices and the seeded random source
//! - [`network`]: parameters, forward pass, losses, backpropagation
//! - [`optim`]: the Nadam optimizer
//! - [`data`]: CSV loading, one-hot targets, bundled tables
//! - [`experiment`]: training loop, importance reports, gradient check, cases
//! - [`cli`]: the `expdnn` command line and model files

pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod network;
pub mod numerics;
pub mod optim;

pub use error::{Error, Result};
