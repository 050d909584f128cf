//! Variable-bandwidth kernel regression.
//!
//! The estimator replaces the global bandwidth `h` of Nadaraya–Watson with a
//! per-observation bandwidth `h/α(q(X_i))`, where `q = f·√|r'|` and `α` is a
//! clipped square-root law. With the true `q` the pointwise bias is of order
//! `h⁴` rather than `h²`; the two-stage version estimates `q` from a pilot fit.
//!
//! Modules:
//! - [`kernels`], [`clipping`]: building blocks.
//! - [`estimators`]: density, regression and pilot estimators.
//! - [`theory`]: bias coefficient, asymptotic variance, optimal bandwidth.
//! - [`simulate`]: seeded Monte Carlo harness.
//! - [`cli`]: file formats and the `vbkreg` command line.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clipping;
pub mod diff;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod quadrature;
pub mod simulate;
pub mod theory;

pub use clipping::ClipSpec;
pub use error::{Error, Result};
pub use estimators::{BandwidthPlan, EstimateAtPoint, Sample, VbFit};
pub use kernels::{Kernel, KernelKind};
