use nalgebra::{DMatrix, DVector};

use super::Prediction;
use crate::error::{invalid, Result};
use crate::linalg::{block_diag, cholesky, symmetrize};

/// Measurements and prediction stacked into one linear regression
/// `y = H x + e`, `cov(e) = S`, together with its prewhitened form
/// `L^-1 y = L^-1 H x + xi`, `cov(xi) = I`, where `S = L L^T` blockwise.
///
/// Rows are ordered measurements first, then states.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRegressionForm {
    pub n_z: usize,
    pub n_x: usize,
    pub y: DVector<f64>,
    pub h: DMatrix<f64>,
    pub s: DMatrix<f64>,
    /// Statistically linearized measurement block `Pxz^T P^-1`.
    pub h_meas: DMatrix<f64>,
    pub y_w: DVector<f64>,
    pub h_w: DMatrix<f64>,
    l_meas: DMatrix<f64>,
    l_pred: DMatrix<f64>,
    /// Order in which each block's rows enter its Cholesky factor.
    order_meas: Vec<usize>,
    order_pred: Vec<usize>,
}

impl BatchRegressionForm {
    pub fn rows(&self) -> usize {
        self.n_z + self.n_x
    }

    /// Applies the prewhitening transform `L^-1` to a vector in row space.
    /// Whitened row `i` stays attached to original row `i`.
    pub fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for (offset, l, order) in [(0, &self.l_meas, &self.order_meas), (self.n_z, &self.l_pred, &self.order_pred)] {
            let block = DVector::from_iterator(order.len(), order.iter().map(|&i| v[offset + i]));
            let w = l.solve_lower_triangular(&block).expect("triangular factor");
            for (k, &i) in order.iter().enumerate() {
                out[offset + i] = w[k];
            }
        }
        out
    }

    /// Re-whitens with the rows of each block ordered by decreasing
    /// `weights` (ties keep row order), so that a downweighted row only
    /// enters its own whitened row and those of rows weighted lower still.
    /// The least-squares solution does not depend on the order.
    pub fn isolate_rows(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.rows() {
            return Err(invalid("row weights do not match the regression"));
        }
        let order = |offset: usize, n: usize| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| weights[offset + b].total_cmp(&weights[offset + a]));
            idx
        };
        let order_meas = order(0, self.n_z);
        let order_pred = order(self.n_z, self.n_x);
        if order_meas == self.order_meas && order_pred == self.order_pred {
            return Ok(());
        }
        let factor = |offset: usize, order: &[usize], what: &'static str| -> Result<DMatrix<f64>> {
            let n = order.len();
            let block = DMatrix::from_fn(n, n, |a, b| self.s[(offset + order[a], offset + order[b])]);
            Ok(cholesky(&block, what)?.l())
        };
        self.l_meas = factor(0, &order_meas, "measurement block of the joint covariance")?;
        self.l_pred = factor(self.n_z, &order_pred, "predicted covariance")?;
        self.order_meas = order_meas;
        self.order_pred = order_pred;
        self.rewhiten();
        Ok(())
    }

    fn rewhiten(&mut self) {
        self.y_w = self.whiten(&self.y);
        let mut h_w = DMatrix::zeros(self.rows(), self.n_x);
        for j in 0..self.n_x {
            h_w.set_column(j, &self.whiten(&self.h.column(j).into_owned()));
        }
        self.h_w = h_w;
    }

    /// Whitened residuals `L^-1 (y - H x)`.
    pub fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.y_w - &self.h_w * x
    }
}

/// Builds the batch regression from an unscented prediction.
///
/// The measurement block is linearized as `H_m = Pxz^T P^-1` around the
/// point used for the measurement moments; its linearization error
/// `Pzz - H_m P H_m^T` is added to `R`.
pub fn build_batch_regression(pred: &Prediction, z: &DVector<f64>, r: &DMatrix<f64>) -> Result<BatchRegressionForm> {
    let n_x = pred.belief.dim();
    let n_z = pred.z_hat.len();
    if z.len() != n_z || r.shape() != (n_z, n_z) || pred.pxz.shape() != (n_x, n_z) {
        return Err(invalid("batch regression inputs have inconsistent dimensions"));
    }
    let p = &pred.belief.covariance;
    let chol_p = cholesky(p, "predicted covariance")?;
    // H_m^T = P^-1 Pxz
    let h_meas = chol_p.solve(&pred.pxz).transpose();
    let r_tilde = symmetrize(&(r + &pred.pzz - &h_meas * p * h_meas.transpose()));
    let chol_r = cholesky(&r_tilde, "measurement block of the joint covariance")?;

    let mut y = DVector::zeros(n_z + n_x);
    y.rows_mut(0, n_z).copy_from(&(z - &pred.z_hat + &h_meas * &pred.linearization_point));
    y.rows_mut(n_z, n_x).copy_from(&pred.belief.mean);
    let mut h = DMatrix::zeros(n_z + n_x, n_x);
    h.view_mut((0, 0), (n_z, n_x)).copy_from(&h_meas);
    h.view_mut((n_z, 0), (n_x, n_x)).fill_with_identity();
    let s = block_diag(&r_tilde, p);

    let l_meas = chol_r.l();
    let l_pred = chol_p.l();
    let mut form = BatchRegressionForm {
        n_z,
        n_x,
        y_w: DVector::zeros(0),
        h_w: DMatrix::zeros(0, 0),
        y,
        h,
        s,
        h_meas,
        l_meas,
        l_pred,
        order_meas: (0..n_z).collect(),
        order_pred: (0..n_x).collect(),
    };
    form.rewhiten();
    Ok(form)
}
