//! Disagreement lab: train small tabular classifiers, explain their
//! predictions with six feature-attribution methods, and quantify how much
//! those explanations disagree.
//!
//! The pipeline is split into the modules below, roughly in data-flow order:
//!
//! - [`data`]: CSV ingestion, train/test split, standardization.
//! - [`models`]: logistic regression and ReLU MLP with exact input gradients.
//! - [`explainers`]: Gradient, Gradient*Input, Integrated Gradients,
//!   SmoothGrad, LIME and KernelSHAP (exact and sampled).
//! - [`metrics`]: the six pairwise disagreement metrics.
//! - [`harness`]: end-to-end experiments, aggregation, k-sweeps and reports.
//! - [`cli`]: the `disagree` command-line surface.

pub mod cli;
pub mod data;
pub mod error;
pub mod explainers;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod seed;

pub use error::{Error, Result};
