use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::GaussianBelief;
use crate::error::{invalid, Result};
use crate::linalg::{cholesky, symmetrize};

/// Scaled unscented-transform spread parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigmaParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for SigmaParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 2.0, kappa: 0.0 }
    }
}

impl SigmaParams {
    fn lambda(&self, n: usize) -> f64 {
        self.alpha * self.alpha * (n as f64 + self.kappa) - n as f64
    }
}

/// `2n + 1` symmetric sigma points, one per row, with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet {
    pub points: DMatrix<f64>,
    pub mean_weights: DVector<f64>,
    pub cov_weights: DVector<f64>,
}

impl SigmaPointSet {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }

    pub fn weighted_mean(&self) -> DVector<f64> {
        self.points.transpose() * &self.mean_weights
    }

    pub fn weighted_covariance(&self) -> DMatrix<f64> {
        let mean = self.weighted_mean();
        let dev = DMatrix::from_fn(self.points.ncols(), self.len(), |r, c| self.points[(c, r)] - mean[r]);
        weighted_outer(&dev, &dev, &self.cov_weights)
    }
}

/// Builds the sigma points of a belief from the Cholesky factor of its
/// covariance.
pub fn generate_sigma_points(belief: &GaussianBelief, params: &SigmaParams) -> Result<SigmaPointSet> {
    let n = belief.dim();
    let lambda = params.lambda(n);
    let c = n as f64 + lambda;
    if !(c > 0.0 && params.alpha > 0.0) {
        return Err(invalid(format!("sigma spread n + lambda = {c} must be positive")));
    }
    let chol = cholesky(&belief.covariance, "sigma-point covariance")?;
    let root = chol.l() * c.sqrt();
    let mut points = DMatrix::zeros(2 * n + 1, n);
    points.row_mut(0).copy_from(&belief.mean.transpose());
    for j in 0..n {
        let col = root.column(j);
        points.row_mut(1 + j).copy_from(&(&belief.mean + col).transpose());
        points.row_mut(1 + n + j).copy_from(&(&belief.mean - col).transpose());
    }
    let wi = 1.0 / (2.0 * c);
    let mut mean_weights = DVector::from_element(2 * n + 1, wi);
    let mut cov_weights = mean_weights.clone();
    mean_weights[0] = lambda / c;
    cov_weights[0] = lambda / c + 1.0 - params.alpha * params.alpha + params.beta;
    Ok(SigmaPointSet { points, mean_weights, cov_weights })
}

/// Sigma points pushed through a nonlinear map.
#[derive(Debug, Clone, PartialEq)]
pub struct UnscentedOutput {
    /// Transformed points, one per column.
    pub outputs: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Cross-covariance between the input and the output.
    pub cross: DMatrix<f64>,
}

pub fn unscented_transform<F>(set: &SigmaPointSet, mut f: F) -> Result<UnscentedOutput>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if set.is_empty() {
        return Err(invalid("empty sigma-point set"));
    }
    let first = f(&set.point(0))?;
    let m = first.len();
    let mut outputs = DMatrix::zeros(m, set.len());
    outputs.column_mut(0).copy_from(&first);
    for i in 1..set.len() {
        let y = f(&set.point(i))?;
        if y.len() != m {
            return Err(invalid("map output dimension changed between sigma points"));
        }
        outputs.column_mut(i).copy_from(&y);
    }
    let mean = &outputs * &set.mean_weights;
    let x_mean = set.weighted_mean();
    let dy = DMatrix::from_fn(m, set.len(), |r, c| outputs[(r, c)] - mean[r]);
    let dx = DMatrix::from_fn(set.points.ncols(), set.len(), |r, c| set.points[(c, r)] - x_mean[r]);
    let covariance = symmetrize(&weighted_outer(&dy, &dy, &set.cov_weights));
    let cross = weighted_outer(&dx, &dy, &set.cov_weights);
    Ok(UnscentedOutput { outputs, mean, covariance, cross })
}

/// `sum_i w_i a_i b_i^T` for column sets `a` and `b`.
fn weighted_outer(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut aw = a.clone();
    for (mut col, &wi) in aw.column_iter_mut().zip(w.iter()) {
        col *= wi;
    }
    aw * b.transpose()
}
