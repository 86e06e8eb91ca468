//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use gmukf_core::filters::{ukf_predict, PowerSystemModel, Prediction, SigmaParams};
use gmukf_core::harness::{builtin_case, initial_belief, prepare, PreparedRun};
use gmukf_core::nalgebra::{DMatrix, DVector};
use gmukf_core::noise::RngStream;
use gmukf_core::{GaussianBelief, PointCloud, ScenarioSpec};

/// `m` standard normal points in `n` dimensions with the first `outliers`
/// shifted far away.
pub fn gaussian_cloud(m: usize, n: usize, outliers: usize, seed: u64) -> PointCloud {
    let mut rng = RngStream::new(seed);
    let points = DMatrix::from_fn(m, n, |i, _| rng.standard_normal() + if i < outliers { 25.0 } else { 0.0 });
    PointCloud::new(points).expect("valid cloud")
}

/// One realisation of the line-trip case, plus the filter model built for it.
pub struct Fixture {
    pub spec: ScenarioSpec,
    pub prepared: PreparedRun,
    pub model: PowerSystemModel,
    pub initial: GaussianBelief,
}

impl Fixture {
    pub fn new(horizon: f64) -> Self {
        let mut spec = builtin_case("case1").expect("builtin case");
        spec.horizon = horizon;
        let prepared = prepare(&spec).expect("scenario prepares");
        let model = PowerSystemModel::new(
            Arc::clone(&prepared.system),
            &spec.process_noise,
            &spec.measurement_variances(),
            spec.filter_step,
        )
        .expect("model");
        let initial = initial_belief(prepared.system.equilibrium(), spec.init_error);
        Self { spec, prepared, model, initial }
    }

    pub fn dt(&self) -> f64 {
        self.spec.sample_interval()
    }

    pub fn measurement(&self, k: usize) -> &DVector<f64> {
        &self.prepared.measurements[k]
    }

    pub fn first_prediction(&self) -> Prediction {
        ukf_predict(&self.initial, &self.model, self.prepared.truth.times[1], self.dt(), &SigmaParams::default())
            .expect("prediction")
    }
}
