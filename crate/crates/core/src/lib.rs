//! Robust dynamic state estimation for power systems.
//!
//! The crate provides a generalized maximum-likelihood unscented Kalman
//! filter (GM-UKF), a baseline UKF, heavy-tailed noise generators, a
//! multi-machine power system simulator producing PMU-style measurements,
//! and a scenario harness reproducing outlier, data-loss and attack studies.

pub mod dynamics;
pub mod error;
pub mod filters;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod robust_stats;

pub use error::{Error, Result};
pub use filters::{Estimator, FilterKind, GaussianBelief, GmUkf, Ukf};
pub use robust_stats::{HuberConfig, PointCloud, PsResult};
pub use harness::{RunResult, ScenarioSpec};
pub use nalgebra;
