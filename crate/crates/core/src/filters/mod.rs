//! Baseline UKF and the GM-UKF.
//!
//! The GM-UKF replaces the Kalman gain update by a robust regression:
//! the unscented prediction and the measurement are stacked into a batch
//! regression, prewhitened, screened with projection statistics on a
//! two-time matrix of innovations and predicted-state increments, solved by
//! Huber IRLS, and given a covariance from the estimator's influence
//! function.

mod covariance;
mod gm_ukf;
mod irls;
mod model;
mod outliers;
mod regression;
mod sigma;
mod ukf;

use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{max_abs_asymmetry, min_eigenvalue};

pub use covariance::{update_covariance, CovarianceUpdate, COVARIANCE_FLOOR_RATIO};
pub use gm_ukf::{gm_ukf_step, GmUkf, GmUkfConfig, GmUkfStep};
pub use irls::{huber_objective, irls_solve, robust_scale, IrlsResult};
pub use model::{ChannelVariances, LinearModel, PowerSystemModel, ProcessNoise, SystemModel};
pub use outliers::{detect_outliers, standardized_quantities, TwoTimeMatrix};
pub use regression::{build_batch_regression, BatchRegressionForm};
pub use sigma::{generate_sigma_points, unscented_transform, SigmaParams, SigmaPointSet, UnscentedOutput};
pub use ukf::{ukf_predict, ukf_update, Prediction, Ukf};

/// Tolerance on `|P - P^T|` accepted for a belief covariance.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// State mean and covariance at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianBelief {
    /// Builds a belief, rejecting asymmetric or non-positive-definite
    /// covariances.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let b = Self { mean, covariance };
        b.validate()?;
        Ok(b)
    }

    /// Belief with a diagonal covariance.
    pub fn diagonal(mean: DVector<f64>, variances: &DVector<f64>) -> Result<Self> {
        Self::new(mean, DMatrix::from_diagonal(variances))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mean.len();
        if n == 0 || self.covariance.nrows() != n || self.covariance.ncols() != n {
            return Err(invalid(format!(
                "belief mean has {n} entries but covariance is {}x{}",
                self.covariance.nrows(),
                self.covariance.ncols()
            )));
        }
        if self.mean.iter().any(|v| !v.is_finite()) {
            return Err(invalid("belief mean is not finite"));
        }
        let asym = max_abs_asymmetry(&self.covariance);
        if !(asym <= SYMMETRY_TOL * (1.0 + self.covariance.amax())) {
            return Err(invalid(format!("belief covariance asymmetric by {asym:e}")));
        }
        let min_eig = min_eigenvalue(&self.covariance);
        if !(min_eig > 0.0) {
            return Err(Error::NotPositiveDefinite { what: "belief covariance", min_eigenvalue: min_eig });
        }
        Ok(())
    }

    pub fn std_devs(&self) -> DVector<f64> {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

/// Corruption applied to the predicted state inside one filter step,
/// after the unscented transform and before the update. Models gross
/// process-model errors (innovation outliers) and attacks on the
/// prediction rows of the batch regression.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepPerturbation {
    /// `(state index, factor)`: the predicted value is multiplied by the factor.
    pub scale: Vec<(usize, f64)>,
    /// `(state index, k)`: adds `k` predicted standard deviations.
    pub bias_sd: Vec<(usize, f64)>,
}

impl StepPerturbation {
    pub fn is_empty(&self) -> bool {
        self.scale.is_empty() && self.bias_sd.is_empty()
    }

    /// Applies the corruption to a predicted belief's mean.
    pub fn apply(&self, belief: &mut GaussianBelief) -> Result<()> {
        let n = belief.dim();
        for &(i, f) in &self.scale {
            if i >= n {
                return Err(invalid(format!("perturbed state {i} out of range")));
            }
            belief.mean[i] *= f;
        }
        for &(i, k) in &self.bias_sd {
            if i >= n {
                return Err(invalid(format!("perturbed state {i} out of range")));
            }
            belief.mean[i] += k * belief.covariance[(i, i)].max(0.0).sqrt();
        }
        Ok(())
    }
}

/// Per-step record streamed to the harness.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepDiagnostics {
    pub time: f64,
    pub elapsed: Duration,
    /// IRLS iterations including the initial WLS solve (0 for the UKF).
    pub iterations: usize,
    pub converged: bool,
    /// Every IRLS reweighting did not increase the objective.
    pub objective_monotone: bool,
    /// Projection-statistics outlier flags per regression row.
    pub ps_flags: Vec<bool>,
    pub ps_weights: Vec<f64>,
    /// Minimum eigenvalue of the posterior covariance.
    pub min_eigenvalue: f64,
    /// Eigenvalue flooring was needed to keep the covariance definite.
    pub floored: bool,
    /// The filter is (now or previously) diverged and its belief frozen.
    pub diverged: bool,
    pub error: Option<String>,
}

/// A recursive state estimator fed one measurement vector per sample.
pub trait Estimator: Send {
    fn name(&self) -> &'static str;
    fn belief(&self) -> &GaussianBelief;
    fn time(&self) -> f64;
    fn diverged(&self) -> bool;
    /// Advances the estimate to time `t` using measurement `z`.
    fn step(&mut self, t: f64, z: &DVector<f64>, perturbation: Option<&StepPerturbation>) -> StepDiagnostics;
}

/// Which estimator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Ukf,
    GmUkf,
}

impl FilterKind {
    pub const ALL: [FilterKind; 2] = [FilterKind::Ukf, FilterKind::GmUkf];

    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Ukf => "ukf",
            FilterKind::GmUkf => "gm_ukf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ukf" => Ok(FilterKind::Ukf),
            "gm_ukf" | "gmukf" => Ok(FilterKind::GmUkf),
            other => Err(invalid(format!("unknown filter `{other}` (expected ukf or gm_ukf)"))),
        }
    }
}

/// Conditions under which a filter declares divergence, beyond numerical
/// failure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergenceConfig {
    /// Largest plausible magnitude of any state estimate.
    pub state_bound: f64,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self { state_bound: 1e3 }
    }
}

impl DivergenceConfig {
    pub(crate) fn check(&self, belief: &GaussianBelief) -> Result<()> {
        if let Some(i) = belief.mean.iter().position(|v| !(v.abs() <= self.state_bound)) {
            return Err(invalid(format!("state {i} estimate {} outside bound {}", belief.mean[i], self.state_bound)));
        }
        Ok(())
    }
}
