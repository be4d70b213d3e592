//! Dense-layer generative models for augmenting small tabular datasets.
//!
//! The crate is organised bottom-up:
//!
//! - [`nncore`]: matrices, dense/batch-norm/dropout/activation layers, losses,
//!   a fixed layer-stack backward pass and the Adam optimizer.
//! - [`genmodels`]: VAE, conditional GAN and VAE-SGAN built from those layers.
//! - [`augment`]: the iterative reconstruct-and-append loop (plain and
//!   similarity-gated) that grows a training pool and tracks the best scores.
//! - [`classify`]: logistic regression, RFE, the DNN evaluator, metrics and
//!   stratified fold plans.
//! - [`data`]: IDX/CSV ingestion, the 1500-image MNIST subset, normalization
//!   and a synthetic surrogate for a small four-class clinical feature table.
//!
//! All randomness flows from explicitly seeded [`rng::Rng`] values; there is no
//! global generator.

pub mod augment;
pub mod classify;
pub mod data;
pub mod error;
pub mod genmodels;
pub mod nncore;
pub mod rng;

pub use error::{Error, Result};
