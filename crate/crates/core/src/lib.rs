//! Ordinal three-category risk prediction from grouped tabular data.
//!
//! The pipeline: load or generate a [`dataset::Dataset`] of drugs with
//! repeated observations, optionally impute missing cells
//! ([`impute`]), fit two binary base learners behind the
//! [`learner::BinaryLearner`] trait and combine them into low / intermediate /
//! high probabilities ([`ordinal`]), then evaluate with leave-one-drug-out
//! cross-validation and the drivers in [`eval`].

pub mod cart;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod forest;
pub mod impute;
pub mod learner;
pub mod logistic;
pub mod metrics;
pub mod ordinal;
pub mod rng;

pub use error::{Error, ErrorKind, Result};
