use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::sigma::{generate_sigma_points, unscented_transform, SigmaParams};
use super::{DivergenceConfig, Estimator, GaussianBelief, StepDiagnostics, StepPerturbation, SystemModel};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky, min_eigenvalue, symmetrize};

/// Output of the unscented prediction step.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Predicted state mean and covariance, process noise included.
    pub belief: GaussianBelief,
    /// Mean around which the measurement function was linearized. Differs
    /// from `belief.mean` only after a perturbation.
    pub linearization_point: DVector<f64>,
    pub z_hat: DVector<f64>,
    /// Predicted measurement covariance without measurement noise.
    pub pzz: DMatrix<f64>,
    /// State-measurement cross-covariance.
    pub pxz: DMatrix<f64>,
}

impl Prediction {
    /// Corrupts the predicted mean, leaving the measurement moments alone.
    pub fn perturb(&mut self, p: &StepPerturbation) -> Result<()> {
        p.apply(&mut self.belief)
    }
}

/// Propagates a belief from time `t` over `dt` through the process model,
/// then regenerates sigma points from the predicted belief and pushes them
/// through the measurement function at `t + dt`.
pub fn ukf_predict(
    belief: &GaussianBelief,
    model: &dyn SystemModel,
    t: f64,
    dt: f64,
    params: &SigmaParams,
) -> Result<Prediction> {
    if belief.dim() != model.state_dim() {
        return Err(invalid("belief dimension does not match the model"));
    }
    let sigma = generate_sigma_points(belief, params)?;
    let prop = unscented_transform(&sigma, |x| model.transition(x, t, dt))?;
    let cov = symmetrize(&(prop.covariance + model.process_noise()));
    let predicted = GaussianBelief { mean: prop.mean, covariance: cov };
    let sigma = generate_sigma_points(&predicted, params)?;
    let meas = unscented_transform(&sigma, |x| model.observe(x, t + dt))?;
    Ok(Prediction {
        linearization_point: predicted.mean.clone(),
        belief: predicted,
        z_hat: meas.mean,
        pzz: meas.covariance,
        pxz: meas.cross,
    })
}

/// Kalman-gain update with the unscented moments.
pub fn ukf_update(pred: &Prediction, z: &DVector<f64>, r: &DMatrix<f64>) -> Result<GaussianBelief> {
    if z.len() != pred.z_hat.len() || r.shape() != pred.pzz.shape() {
        return Err(invalid("measurement dimension does not match the prediction"));
    }
    let s = symmetrize(&(&pred.pzz + r));
    let chol = cholesky(&s, "innovation covariance")?;
    // K = Pxz S^-1, obtained from S K^T = Pxz^T.
    let gain = chol.solve(&pred.pxz.transpose()).transpose();
    let mean = &pred.belief.mean + &gain * (z - &pred.z_hat);
    let cov = symmetrize(&(&pred.belief.covariance - &gain * &s * gain.transpose()));
    let min_eig = min_eigenvalue(&cov);
    if !(min_eig > 0.0) {
        return Err(Error::NotPositiveDefinite { what: "posterior covariance", min_eigenvalue: min_eig });
    }
    if mean.iter().any(|v| !v.is_finite()) {
        return Err(invalid("posterior mean is not finite"));
    }
    Ok(GaussianBelief { mean, covariance: cov })
}

/// Baseline unscented Kalman filter. Freezes its belief and raises the
/// divergence flag on the first numerical failure.
pub struct Ukf<M: SystemModel> {
    model: M,
    belief: GaussianBelief,
    time: f64,
    params: SigmaParams,
    divergence: DivergenceConfig,
    diverged: bool,
}

impl<M: SystemModel> Ukf<M> {
    pub fn new(model: M, initial: GaussianBelief, t0: f64, params: SigmaParams, divergence: DivergenceConfig) -> Result<Self> {
        initial.validate()?;
        if initial.dim() != model.state_dim() {
            return Err(invalid("initial belief dimension does not match the model"));
        }
        Ok(Self { model, belief: initial, time: t0, params, divergence, diverged: false })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    fn try_step(&self, t: f64, z: &DVector<f64>, perturbation: Option<&StepPerturbation>) -> Result<GaussianBelief> {
        let mut pred = ukf_predict(&self.belief, &self.model, self.time, t - self.time, &self.params)?;
        if let Some(p) = perturbation {
            pred.perturb(p)?;
        }
        let post = ukf_update(&pred, z, self.model.measurement_noise())?;
        self.divergence.check(&post)?;
        Ok(post)
    }
}

impl<M: SystemModel> Estimator for Ukf<M> {
    fn name(&self) -> &'static str {
        "ukf"
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
        if !self.diverged {
            match self.try_step(t, z, perturbation) {
                Ok(post) => {
                    diag.min_eigenvalue = min_eigenvalue(&post.covariance);
                    diag.converged = true;
                    diag.objective_monotone = true;
                    self.belief = post;
                }
                Err(e) => {
                    log::debug!("ukf diverged at t = {t:.3}: {e}");
                    self.diverged = true;
                    diag.error = Some(e.to_string());
                }
            }
        }
        self.time = t;
        diag.diverged = self.diverged;
        diag.elapsed = start.elapsed();
        diag
    }
}
