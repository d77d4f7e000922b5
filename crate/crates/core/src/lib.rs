//! Spectral-domain simulation of slow light for Gaussian and amplitude
//! modulated Gaussian (AMG) pulses in an EIT medium, with compensation of
//! the absorptive distortion and decomposition of an AMG pulse into its
//! slowed carrier and advanced sidebands.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod csvio;
pub mod error;
pub mod medium;
pub mod propagation;
pub mod scenario;
pub mod signal;
pub mod spectral;

pub use error::{Error, Result};
