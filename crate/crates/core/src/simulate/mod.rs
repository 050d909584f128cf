//! Seeded Monte Carlo harness: random variates, regression scenarios, RMSE
//! and MSE comparisons, and empirical bias-order and normal-limit checks.
//!
//! Replication `j` of an experiment with seed `s` always draws from the same
//! random stream, so results do not depend on the number of worker threads.

pub mod checks;
pub mod cv;
pub mod distributions;
pub mod mc;
pub mod scenario;

pub use checks::{bias_slope, clt_check, BiasCheck, BiasSlopeReport, CltCheck, CltReport, Design, EstimatorKind};
pub use cv::{cv_grid, nw_cv_bandwidth};
pub use distributions::{rep_rng, Distribution};
pub use mc::{mc_mse_points, mc_rmse, rmse, MCReport, PointMse, Rmse};
pub use scenario::{gen_regression_sample, Regression, ScenarioConfig};
