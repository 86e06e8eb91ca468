use nalgebra::{Cholesky, DMatrix, DVector};

use super::BatchRegressionForm;
use crate::error::{invalid, Error, Result};
use crate::robust_stats::{huber_rho, huber_weight, median, HuberConfig, MAD_CONSISTENCY};

/// Lower bound on the residual scale, reached only for (near) exact fits.
const SCALE_FLOOR: f64 = 1e-12;

/// Outcome of the IRLS solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IrlsResult {
    pub x: DVector<f64>,
    /// Final Huber weights `psi(r_S)/r_S` per row.
    pub weights: DVector<f64>,
    /// Weighted least-squares solves performed, the initial one included.
    pub iterations: usize,
    pub converged: bool,
    /// Residual scale used for the final reweighting.
    pub scale: f64,
    /// For every reweighting `t`: objective at `x_t` and at `x_{t+1}`, both
    /// evaluated with the scale `s_t` used to build the weights.
    pub objective_trace: Vec<(f64, f64)>,
}

impl IrlsResult {
    /// Every reweighting step lowered (or kept) the Huber objective.
    pub fn is_monotone(&self) -> bool {
        self.objective_trace.iter().all(|&(before, after)| after <= before * (1.0 + 1e-9) + 1e-12)
    }
}

/// `1.4826 * median |r|`, floored away from zero.
pub fn robust_scale(r: &DVector<f64>) -> f64 {
    let abs: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    (MAD_CONSISTENCY * median(&abs)).max(SCALE_FLOOR)
}

/// GM objective `sum_i omega_i^2 rho(r_i / (s omega_i))`.
pub fn huber_objective(r: &DVector<f64>, omega: &[f64], scale: f64, lambda: f64) -> f64 {
    r.iter().zip(omega).map(|(&ri, &w)| w * w * huber_rho(ri / (scale * w), lambda)).sum()
}

fn weighted_solve(h: &DMatrix<f64>, y: &DVector<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
    let mut hq = h.transpose();
    for (mut col, &w) in hq.column_iter_mut().zip(q.iter()) {
        col *= w;
    }
    let normal = &hq * h;
    let rhs = &hq * y;
    let chol = Cholesky::new(normal).ok_or(Error::RankDeficient)?;
    Ok(chol.solve(&rhs))
}

/// Solves the prewhitened regression with the Huber GM-estimator.
///
/// The first iteration is ordinary weighted least squares on the whitened
/// rows; each later one recomputes the scale `s`, the standardized
/// residuals `r_S = r / (s omega)` and reweights by `psi(r_S) / r_S`.
/// Iteration stops once the infinity norm of the state increment drops
/// below the tolerance or the iteration budget is spent.
pub fn irls_solve(reg: &BatchRegressionForm, ps_weights: &[f64], config: &HuberConfig) -> Result<IrlsResult> {
    config.validate()?;
    let m = reg.rows();
    if ps_weights.len() != m {
        return Err(invalid(format!("{} PS weights for {m} regression rows", ps_weights.len())));
    }
    if let Some(w) = ps_weights.iter().find(|&&w| !(w > 0.0 && w <= 1.0)) {
        return Err(invalid(format!("PS weight {w} outside (0, 1]")));
    }
    let mut q = DVector::from_element(m, 1.0);
    let mut x = weighted_solve(&reg.h_w, &reg.y_w, &q)?;
    let mut iterations = 1;
    let mut converged = false;
    let mut scale = robust_scale(&reg.residuals(&x));
    let mut trace = Vec::new();
    while iterations < config.irls_max_iter {
        let r = reg.residuals(&x);
        scale = robust_scale(&r);
        for i in 0..m {
            q[i] = huber_weight(r[i] / (scale * ps_weights[i]), config.lambda);
        }
        let next = weighted_solve(&reg.h_w, &reg.y_w, &q)?;
        iterations += 1;
        let before = huber_objective(&r, ps_weights, scale, config.lambda);
        let after = huber_objective(&reg.residuals(&next), ps_weights, scale, config.lambda);
        trace.push((before, after));
        let step = (&next - &x).amax();
        x = next;
        if step < config.irls_tol {
            converged = true;
            break;
        }
    }
    if config.irls_max_iter == 1 {
        converged = true;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("IRLS produced a non-finite estimate"));
    }
    Ok(IrlsResult { x, weights: q, iterations, converged, scale, objective_trace: trace })
}
