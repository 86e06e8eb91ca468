//! Robust multivariate statistics: medians, MAD, projection statistics,
//! Huber score functions and the Gaussian efficiency coefficient of the
//! Huber GM-estimator.

mod huber;
mod location;
mod projection;

pub use huber::{
    efficiency_coefficient, huber_expectations, huber_psi, huber_psi_prime, huber_rho,
    huber_weight, HuberExpectations,
};
pub use location::{coordinatewise_median, mad, median, Mad, MAD_CONSISTENCY};
pub use projection::{chi2_2_quantile, projection_statistics, PsResult, MIN_WEIGHT};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A set of `m` points in `n` dimensions, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: DMatrix<f64>,
}

impl PointCloud {
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(invalid("point cloud must have at least one point and one dimension"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(invalid("point cloud contains non-finite entries"));
        }
        Ok(Self { points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("point cloud rows have unequal lengths"));
        }
        Self::new(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// Tuning of the Huber GM-estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HuberConfig {
    /// Breakpoint of the Huber rho-function.
    pub lambda: f64,
    /// Parameter of the projection-statistics weight function.
    pub d: f64,
    /// Convergence tolerance on the infinity norm of the IRLS state increment.
    pub irls_tol: f64,
    /// Maximum number of IRLS iterations, the initial WLS solve included.
    pub irls_max_iter: usize,
}

impl Default for HuberConfig {
    fn default() -> Self {
        Self { lambda: 1.5, d: 1.5, irls_tol: 0.01, irls_max_iter: 20 }
    }
}

impl HuberConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("huber lambda must be positive, got {}", self.lambda)));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(invalid(format!("weight parameter d must be positive, got {}", self.d)));
        }
        if !(self.irls_tol > 0.0) {
            return Err(invalid(format!("irls_tol must be positive, got {}", self.irls_tol)));
        }
        if self.irls_max_iter == 0 {
            return Err(invalid("irls_max_iter must be at least 1"));
        }
        Ok(())
    }
}
