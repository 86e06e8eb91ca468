use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::covariance::update_covariance;
use super::irls::{irls_solve, IrlsResult};
use super::outliers::{detect_outliers, standardized_quantities, TwoTimeMatrix};
use super::regression::build_batch_regression;
use super::sigma::SigmaParams;
use super::ukf::ukf_predict;
use super::{DivergenceConfig, Estimator, GaussianBelief, StepDiagnostics, StepPerturbation, SystemModel};
use crate::error::{invalid, Result};
use crate::robust_stats::{HuberConfig, PsResult};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmUkfConfig {
    pub huber: HuberConfig,
    pub sigma: SigmaParams,
    pub divergence: DivergenceConfig,
}

/// Everything produced by one GM-UKF step.
#[derive(Debug, Clone, PartialEq)]
pub struct GmUkfStep {
    pub belief: GaussianBelief,
    pub ps: PsResult,
    pub irls: IrlsResult,
    pub floored: bool,
    pub raw_min_eigenvalue: f64,
    /// Standardized quantities of this step, the next step's history.
    pub quantities: DVector<f64>,
}

/// Unscented prediction, batch regression, projection-statistics
/// screening of the two-time matrix, Huber IRLS and the robust covariance
/// update. `history` holds the previous step's standardized quantities;
/// without it all rows get unit weight.
#[allow(clippy::too_many_arguments)]
pub fn gm_ukf_step(
    belief: &GaussianBelief,
    history: Option<&DVector<f64>>,
    t: f64,
    dt: f64,
    z: &DVector<f64>,
    model: &dyn SystemModel,
    config: &GmUkfConfig,
    perturbation: Option<&StepPerturbation>,
) -> Result<GmUkfStep> {
    let r = model.measurement_noise();
    let mut pred = ukf_predict(belief, model, t, dt, &config.sigma)?;
    if let Some(p) = perturbation {
        pred.perturb(p)?;
    }
    let mut reg = build_batch_regression(&pred, z, r)?;
    let quantities = standardized_quantities(&pred, &reg, z, r)?;
    if let Some(h) = history {
        if h.len() != quantities.len() {
            return Err(invalid("two-time history has the wrong length"));
        }
    }
    let two_time = match history {
        Some(h) => TwoTimeMatrix::new(h, &quantities)?,
        None => TwoTimeMatrix::first(&quantities)?,
    };
    let ps = detect_outliers(&two_time, &config.huber)?;
    reg.isolate_rows(&ps.weights)?;
    let irls = irls_solve(&reg, &ps.weights, &config.huber)?;
    let cov = update_covariance(&reg, &irls, &ps.weights, &config.huber)?;
    Ok(GmUkfStep {
        belief: cov.belief,
        ps,
        irls,
        floored: cov.floored,
        raw_min_eigenvalue: cov.raw_min_eigenvalue,
        quantities,
    })
}

/// The GM-UKF estimator. Any failing step freezes the belief and raises
/// the divergence flag.
pub struct GmUkf<M: SystemModel> {
    model: M,
    belief: GaussianBelief,
    time: f64,
    config: GmUkfConfig,
    history: Option<DVector<f64>>,
    diverged: bool,
}

impl<M: SystemModel> GmUkf<M> {
    pub fn new(model: M, initial: GaussianBelief, t0: f64, config: GmUkfConfig) -> Result<Self> {
        config.huber.validate()?;
        initial.validate()?;
        if initial.dim() != model.state_dim() {
            return Err(invalid("initial belief dimension does not match the model"));
        }
        Ok(Self { model, belief: initial, time: t0, config, history: None, diverged: false })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    /// Runs one step and returns its full record, updating the filter.
    pub fn step_detailed(&mut self, t: f64, z: &DVector<f64>, perturbation: Option<&StepPerturbation>) -> Result<GmUkfStep> {
        if self.diverged {
            return Err(invalid("filter has diverged"));
        }
        let out = gm_ukf_step(
            &self.belief,
            self.history.as_ref(),
            self.time,
            t - self.time,
            z,
            &self.model,
            &self.config,
            perturbation,
        )
        .and_then(|s| self.config.divergence.check(&s.belief).map(|_| s));
        self.time = t;
        match out {
            Ok(s) => {
                self.belief = s.belief.clone();
                self.history = Some(s.quantities.clone());
                Ok(s)
            }
            Err(e) => {
                self.diverged = true;
                Err(e)
            }
        }
    }
}

impl<M: SystemModel> Estimator for GmUkf<M> {
    fn name(&self) -> &'static str {
        "gm_ukf"
    }

    fn belief(&self) -> &GaussianBelief {
        &self.belief
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn diverged(&self) -> bool {
        self.diverged
    }

    fn step(&mut self, t: f64, z: &DVector<f64>, perturbation: Option<&StepPerturbation>) -> StepDiagnostics {
        let start = Instant::now();
        let mut diag = StepDiagnostics { time: t, ..Default::default() };
        if self.diverged {
            self.time = t;
        } else {
            match self.step_detailed(t, z, perturbation) {
                Ok(s) => {
                    diag.iterations = s.irls.iterations;
                    diag.converged = s.irls.converged;
                    diag.objective_monotone = s.irls.is_monotone();
                    diag.ps_flags = s.ps.flags;
                    diag.ps_weights = s.ps.weights;
                    diag.min_eigenvalue = crate::linalg::min_eigenvalue(&s.belief.covariance);
                    diag.floored = s.floored;
                }
                Err(e) => {
                    log::debug!("gm-ukf diverged at t = {t:.3}: {e}");
                    diag.error = Some(e.to_string());
                }
            }
        }
        diag.diverged = self.diverged;
        diag.elapsed = start.elapsed();
        diag
    }
}
