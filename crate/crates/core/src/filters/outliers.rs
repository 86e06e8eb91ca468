use nalgebra::{Cholesky, DMatrix, DVector};

use super::{BatchRegressionForm, Prediction};
use crate::error::{invalid, Error, Result};
use crate::linalg::min_eigenvalue;
use crate::robust_stats::{projection_statistics, HuberConfig, PointCloud, PsResult};

/// One 2-D point per regression row: the row's standardized quantity at
/// the previous and the current step.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeMatrix {
    pub rows: DMatrix<f64>,
}

impl TwoTimeMatrix {
    pub fn new(previous: &DVector<f64>, current: &DVector<f64>) -> Result<Self> {
        if previous.len() != current.len() || current.is_empty() {
            return Err(invalid("two-time columns must have equal, non-zero length"));
        }
        if previous.iter().chain(current.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("two-time matrix entries must be finite"));
        }
        let mut rows = DMatrix::zeros(current.len(), 2);
        rows.set_column(0, previous);
        rows.set_column(1, current);
        Ok(Self { rows })
    }

    /// Start-up matrix with no history: the current values duplicated.
    pub fn first(current: &DVector<f64>) -> Result<Self> {
        Self::new(current, current)
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    /// Both columns are identical, so the matrix carries no temporal
    /// information.
    pub fn is_duplicated(&self) -> bool {
        self.rows.column(0) == self.rows.column(1)
    }
}

/// Standardized quantities for the two-time matrix, in regression row
/// order. Measurement rows hold the innovations scaled by their predicted
/// standard deviation. State rows hold the standardized score of each
/// predicted state, `g_j / sqrt(F_jj)` with `g = H_m^T S^-1 e`,
/// `F = H_m^T S^-1 H_m`, `S = P_zz + R` and `e` the measurement residual of
/// the regression at the predicted mean. Under the model every quantity is
/// standard normal. States the snapshot does not observe get 0.
pub fn standardized_quantities(
    pred: &Prediction,
    reg: &BatchRegressionForm,
    z: &DVector<f64>,
    r: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let n_z = z.len();
    let n_x = pred.belief.dim();
    if pred.z_hat.len() != n_z || r.shape() != (n_z, n_z) || pred.pxz.shape() != (n_x, n_z) || reg.n_z != n_z {
        return Err(invalid("standardized quantities: dimension mismatch"));
    }
    let s = &pred.pzz + r;
    let chol = Cholesky::new(s.clone()).ok_or(Error::NotPositiveDefinite {
        what: "innovation covariance",
        min_eigenvalue: min_eigenvalue(&s),
    })?;
    let l = chol.l();
    let nu = z - &pred.z_hat;
    let e = reg.y.rows(0, n_z) - &reg.h_meas * &pred.belief.mean;
    let u = l.solve_lower_triangular(&e).ok_or(Error::RankDeficient)?;
    // G = L^-1 H_m: score H_m^T S^-1 e = G^T u with information G^T G.
    let g = l.solve_lower_triangular(&reg.h_meas).ok_or(Error::RankDeficient)?;
    let mut out = DVector::zeros(n_z + n_x);
    for i in 0..n_z {
        out[i] = nu[i] / s[(i, i)].sqrt();
    }
    for j in 0..n_x {
        let col = g.column(j);
        let sd = col.norm();
        let scale = pred.belief.covariance[(j, j)].max(0.0).sqrt();
        out[n_z + j] = if sd * scale > UNOBSERVED_RATIO { col.dot(&u) / sd } else { 0.0 };
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(invalid("standardized quantities are not finite"));
    }
    Ok(out)
}

/// States with `|G_j| sqrt(P_jj)` below this are treated as unobserved.
const UNOBSERVED_RATIO: f64 = 1e-9;

/// Projection statistics of the two-time points. Weights map row for row
/// onto the regression. A matrix without history, or a cloud whose points
/// all coincide, yields unit weights.
pub fn detect_outliers(two_time: &TwoTimeMatrix, config: &HuberConfig) -> Result<PsResult> {
    let m = two_time.len();
    if two_time.is_duplicated() {
        return Ok(PsResult::uninformative(m));
    }
    let cloud = PointCloud::new(two_time.rows.clone())?;
    let ps = projection_statistics(&cloud, config)?;
    if ps.degenerate && ps.ps.iter().all(|&v| v == 0.0) {
        log::warn!("two-time cloud is degenerate; outlier weights set to 1");
        return Ok(PsResult::uninformative(m));
    }
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::RngStream;

    #[test]
    fn first_step_gives_unit_weights() {
        let v = DVector::from_column_slice(&[0.1, 5.0, -3.0, 0.2, 0.0]);
        let ps = detect_outliers(&TwoTimeMatrix::first(&v).unwrap(), &HuberConfig::default()).unwrap();
        assert!(ps.weights.iter().all(|&w| w == 1.0));
        assert!(ps.degenerate);
    }

    #[test]
    fn jump_in_one_row_is_flagged() {
        let mut rng = RngStream::new(3);
        let prev = DVector::from_fn(30, |_, _| rng.standard_normal());
        let mut cur = DVector::from_fn(30, |_, _| rng.standard_normal());
        cur[17] += 25.0;
        let ps = detect_outliers(&TwoTimeMatrix::new(&prev, &cur).unwrap(), &HuberConfig::default()).unwrap();
        assert!(ps.flags[17]);
        assert!(ps.weights[17] < 0.05);
    }

    #[test]
    fn identical_points_fall_back_to_unit_weights() {
        let a = DVector::from_element(6, 1.0);
        let b = DVector::from_element(6, 2.0);
        let ps = detect_outliers(&TwoTimeMatrix::new(&a, &b).unwrap(), &HuberConfig::default()).unwrap();
        assert!(ps.weights.iter().all(|&w| w == 1.0));
    }

    fn linear_prediction(seed: u64) -> (crate::filters::LinearModel, Prediction, RngStream) {
        use crate::filters::{ukf_predict, GaussianBelief, LinearModel, SigmaParams};
        let mut rng = RngStream::new(seed);
        let (n_x, n_z) = (3, 5);
        let c = DMatrix::from_fn(n_z, n_x, |_, _| rng.standard_normal());
        let m = LinearModel::new(
            DMatrix::identity(n_x, n_x),
            c,
            DMatrix::identity(n_x, n_x) * 0.1,
            DMatrix::identity(n_z, n_z) * 0.2,
        )
        .unwrap();
        let b = GaussianBelief::new(DVector::zeros(n_x), DMatrix::identity(n_x, n_x) * 0.4).unwrap();
        let p = ukf_predict(&b, &m, 0.0, 1.0, &SigmaParams::default()).unwrap();
        (m, p, rng)
    }

    #[test]
    fn quantities_are_standard_normal_under_the_model() {
        use crate::filters::build_batch_regression;
        let (m, p, mut rng) = linear_prediction(8);
        let l = crate::linalg::cholesky(&(&p.pzz + &m.r), "s").unwrap().l();
        let draws = 20_000;
        let mut sq = DVector::zeros(8);
        for _ in 0..draws {
            let z = &p.z_hat + &l * DVector::from_fn(5, |_, _| rng.standard_normal());
            let reg = build_batch_regression(&p, &z, &m.r).unwrap();
            let q = standardized_quantities(&p, &reg, &z, &m.r).unwrap();
            sq += q.component_mul(&q);
        }
        for v in (sq / draws as f64).iter() {
            assert!((v - 1.0).abs() < 0.05, "{v}");
        }
    }

    #[test]
    fn corrupted_prediction_moves_its_state_row() {
        use crate::filters::{build_batch_regression, StepPerturbation};
        let (m, mut p, _) = linear_prediction(9);
        let z = p.z_hat.clone();
        let reg = build_batch_regression(&p, &z, &m.r).unwrap();
        let clean = standardized_quantities(&p, &reg, &z, &m.r).unwrap();
        assert!(clean.amax() < 1e-9);
        p.perturb(&StepPerturbation { scale: vec![], bias_sd: vec![(1, 8.0)] }).unwrap();
        let reg = build_batch_regression(&p, &z, &m.r).unwrap();
        let q = standardized_quantities(&p, &reg, &z, &m.r).unwrap();
        // innovation rows stay at the unperturbed moments
        assert!(q.rows(0, 5).amax() < 1e-9);
        assert!(q[6].abs() > 3.0);
    }
}
