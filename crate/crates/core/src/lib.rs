//! Fraud-detection toolkit.
//!
//! The crate is organized around a small set of subsystems that compose into
//! batch fraud-scoring experiments:
//!
//! - [`dataset`]: CSV ingestion, stratified cross-validation folds, and
//!   equal-duration time-frame splitting.
//! - [`metrics`]: confusion counts and imbalance-aware evaluation metrics
//!   (precision, recall, F-scores, ROC AUC).
//! - [`forest`]: a from-scratch CART decision tree and bagged random forest,
//!   the base learner used everywhere else.
//! - [`imbalance`]: undersampling strategies (random, cluster centroids) and
//!   the K-segments under-bagging ensemble for extreme class imbalance.
//! - [`features`]: trailing-window transaction aggregation features.
//! - [`graphssl`]: k-NN similarity graphs, discrete graph operators
//!   (gradient, divergence, Laplacian, curvature, p-Laplacian), and the
//!   semi-supervised label-diffusion solver built on them.
//! - [`pipeline`]: multi-horizon detection pipeline with never/every-frame
//!   model-update strategies and an ensemble combiner.
//!
//! All randomized routines take explicit seeds and are deterministic for a
//! fixed seed, including under internal parallelism.

pub mod dataset;
pub mod error;
pub mod features;
pub mod forest;
pub mod graphssl;
pub mod imbalance;
pub mod metrics;
pub mod pipeline;

pub use error::{Error, Result};
