//! Certified reduced basis models for a parametrized elliptic problem with a
//! random reaction coefficient.
//!
//! Two families of models are provided: Monte Carlo reduced basis models
//! (one reduced solve per sample) and stochastic Galerkin reduced basis
//! models (one reduced solve per parameter). Both deliver residual-corrected
//! estimates of the expectation and the variance of a linear output together
//! with rigorous bounds on their deviation from the full-order statistics.

pub mod artifact;
pub mod config;
pub mod error;
pub mod fem;
pub mod kl;
pub mod linalg;
pub mod mcrb;
pub mod mesh;
pub mod model;
pub mod pod;
pub mod rom;
pub mod sgrb;
pub mod stats;
pub mod stochastic;
pub mod study;

pub use error::{Error, Result};
