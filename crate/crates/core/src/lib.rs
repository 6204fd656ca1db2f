//! Bayesian scoring and structure learning for Gaussian DAG models under a
//! normal-Wishart parameter prior, plus a Monte Carlo harness that checks the
//! independence properties characterizing that prior.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characterize;
pub mod cli;
pub mod dag;
pub mod error;
pub mod linalg;
pub mod prior;
pub mod report;
pub mod sampler;
pub mod score;
pub mod search;

pub use error::{Error, Result};
