use nalgebra::Cholesky;

use super::{BatchRegressionForm, GaussianBelief, IrlsResult};
use crate::error::{invalid, Error, Result};
use crate::linalg::{floor_eigenvalues, min_eigenvalue, symmetrize};
use crate::robust_stats::{efficiency_coefficient, HuberConfig};

/// Eigenvalues of the posterior covariance are kept above this fraction of
/// its trace.
pub const COVARIANCE_FLOOR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceUpdate {
    pub belief: GaussianBelief,
    /// Minimum eigenvalue before flooring.
    pub raw_min_eigenvalue: f64,
    pub floored: bool,
}

/// Posterior covariance from the influence function of the GM-estimator:
/// `c (H^T W H)^-1 (H^T W^2 H) (H^T W H)^-1` on the whitened regression,
/// with `W = diag(omega)` the projection-statistics weights and
/// `c = E[psi^2] / E[psi']^2`.
pub fn update_covariance(
    reg: &BatchRegressionForm,
    irls: &IrlsResult,
    ps_weights: &[f64],
    config: &HuberConfig,
) -> Result<CovarianceUpdate> {
    if ps_weights.len() != reg.rows() || irls.x.len() != reg.n_x {
        return Err(invalid("covariance update: dimension mismatch"));
    }
    let h = &reg.h_w;
    let mut hw = h.transpose();
    let mut hw2 = h.transpose();
    for (i, &w) in ps_weights.iter().enumerate() {
        hw.column_mut(i).scale_mut(w);
        hw2.column_mut(i).scale_mut(w * w);
    }
    let a = symmetrize(&(&hw * h));
    let b = symmetrize(&(&hw2 * h));
    let a_inv = Cholesky::new(a).ok_or(Error::RankDeficient)?.inverse();
    let c = efficiency_coefficient(config.lambda);
    let raw = symmetrize(&(&a_inv * b * &a_inv * c));
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite { what: "posterior covariance", min_eigenvalue: f64::NAN });
    }
    let raw_min = min_eigenvalue(&raw);
    let floor = COVARIANCE_FLOOR_RATIO * raw.trace().abs();
    let (cov, floored) = floor_eigenvalues(&raw, floor);
    if floored {
        log::debug!("posterior covariance floored (min eigenvalue {raw_min:e})");
    }
    Ok(CovarianceUpdate {
        belief: GaussianBelief { mean: irls.x.clone(), covariance: cov },
        raw_min_eigenvalue: raw_min,
        floored,
    })
}
