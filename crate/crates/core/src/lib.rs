//! Covariance of the log-average periodogram of DCT-I spectral components.
//!
//! A zero-mean stationary Gaussian vector `y` of length `p` is mapped to its
//! DCT-I components `Y = D y`; these are grouped into bins of `m` consecutive
//! frequencies and each bin is summarized by the log of its mean power.
//! This crate evaluates the exact covariance of those log-averages, checks
//! it by simulation, and uses the debiased log-averages to estimate the
//! spectral density and the covariance matrix.

pub mod covkernel;
pub mod error;
pub mod estimator;
pub mod mc;
pub mod models;
pub mod specfun;
pub mod transform;

pub use error::{Error, Result};
