use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::inject::{inject, perturbation_schedule, Stage};
use super::metrics::mae;
use super::scenario::{RowAttack, ScenarioSpec};
use crate::dynamics::{ChannelClass, PowerSystem, StateKind, Trajectory};
use crate::error::{invalid, Result};
use crate::filters::{
    Estimator, FilterKind, GaussianBelief, GmUkf, GmUkfConfig, PowerSystemModel, SigmaParams, StepPerturbation, Ukf,
};
use crate::noise::RngStream;

/// RNG sub-stream ids derived from the scenario seed.
pub const STREAM_NOISE: u64 = 0;
pub const STREAM_INJECTION: u64 = 1;
pub const STREAM_ROW_ATTACK: u64 = 2;

/// Truth, corrupted measurements and per-step filter corruptions of one
/// scenario realisation, shared by every filter run on it.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub system: Arc<PowerSystem>,
    pub truth: Trajectory,
    /// Measurements as received by the estimators.
    pub measurements: Vec<DVector<f64>>,
    pub perturbations: Vec<Option<StepPerturbation>>,
    pub state_layout: Vec<(usize, StateKind)>,
    pub measurement_layout: Vec<(usize, ChannelClass)>,
}

/// The output of one filter on one realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub filter: FilterKind,
    /// Posterior means, one per sample (the first is the initial guess).
    pub estimates: Vec<DVector<f64>>,
    /// Posterior standard deviations per sample.
    pub std_devs: Vec<DVector<f64>>,
    /// Per-state mean absolute error over samples after the first.
    pub mae: DVector<f64>,
    pub step_ms: Vec<f64>,
    pub diverged: bool,
    pub diverged_at: Option<f64>,
    pub divergence_reason: Option<String>,
    /// Outlier flags per step and regression row (empty for the UKF).
    pub ps_flags: Vec<Vec<bool>>,
    pub ps_weights: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub nonconverged_steps: usize,
    pub nonmonotone_steps: usize,
    pub min_eigenvalues: Vec<f64>,
    pub floored_steps: usize,
}

impl FilterRun {
    pub fn mean_step_ms(&self) -> f64 {
        if self.step_ms.is_empty() {
            return 0.0;
        }
        self.step_ms.iter().sum::<f64>() / self.step_ms.len() as f64
    }

    pub fn max_step_ms(&self) -> f64 {
        self.step_ms.iter().cloned().fold(0.0, f64::max)
    }

    /// Absolute estimation error of state `j` over time.
    pub fn error_series(&self, truth: &[DVector<f64>], j: usize) -> Vec<f64> {
        self.estimates.iter().zip(truth).map(|(e, x)| (e[j] - x[j]).abs()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario: String,
    pub seed: u64,
    pub times: Vec<f64>,
    pub truth: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
    pub state_labels: Vec<String>,
    pub measurement_labels: Vec<String>,
    pub state_layout: Vec<(usize, StateKind)>,
    pub measurement_layout: Vec<(usize, ChannelClass)>,
    pub filters: Vec<FilterRun>,
}

impl RunResult {
    pub fn filter(&self, kind: FilterKind) -> Option<&FilterRun> {
        self.filters.iter().find(|f| f.filter == kind)
    }
}

/// Initial belief: the equilibrium scaled by `1 + e`, with standard
/// deviations `e |x_eq|` plus a small floor.
pub fn initial_belief(equilibrium: &DVector<f64>, init_error: f64) -> GaussianBelief {
    let mean = equilibrium * (1.0 + init_error);
    let var = equilibrium.map(|v| (init_error * v).powi(2) + 1e-6);
    GaussianBelief { mean, covariance: DMatrix::from_diagonal(&var) }
}

fn attack_rows(attack: &RowAttack, n_z: usize, n_x: usize, rng: &mut RngStream) -> Vec<usize> {
    let total = if attack.measurements_only { n_z } else { n_z + n_x };
    let count = ((attack.fraction * total as f64).round() as usize).min(total);
    let mut rows: Vec<usize> = (0..total).collect();
    for i in 0..count {
        let j = i + rng.index(total - i);
        rows.swap(i, j);
    }
    rows.truncate(count);
    rows.sort_unstable();
    rows
}

/// Simulates the truth and builds the corrupted measurement stream.
pub fn prepare(spec: &ScenarioSpec) -> Result<PreparedRun> {
    spec.validate()?;
    let system = Arc::new(PowerSystem::new(spec.system.build()?)?);
    let dt = spec.sample_interval();
    let truth = system.simulate_truth(spec.horizon, dt, crate::dynamics::TRUTH_STEP.min(dt), spec.speed_limit)?;
    let state_layout = system.state_layout();
    let measurement_layout = system.measurement_layout();
    let times = truth.times.clone();

    let mut measurements = truth.clean_measurements.clone();
    let mut inj_rng = RngStream::substream(spec.seed, STREAM_INJECTION);
    for inj in spec.injections.iter().filter(|i| i.kind.stage() == Stage::Clean) {
        inject(&mut measurements, &times, &measurement_layout, inj, &spec.noise, &mut inj_rng)?;
    }
    let mut noise_rng = RngStream::substream(spec.seed, STREAM_NOISE);
    for z in measurements.iter_mut() {
        for (i, (_, class)) in measurement_layout.iter().enumerate() {
            z[i] += spec.noise.get(*class).sample(&mut noise_rng);
        }
    }
    for inj in spec.injections.iter().filter(|i| i.kind.stage() == Stage::Received) {
        inject(&mut measurements, &times, &measurement_layout, inj, &spec.noise, &mut inj_rng)?;
    }

    let mut perturbations = perturbation_schedule(&times, &state_layout, &spec.injections);
    if let Some(attack) = &spec.row_attack {
        let variances = spec.measurement_variances();
        let (n_z, n_x) = (measurement_layout.len(), state_layout.len());
        let mut rng = RngStream::substream(spec.seed, STREAM_ROW_ATTACK);
        for (k, &t) in times.iter().enumerate() {
            if k == 0 || t < attack.start || t > attack.end {
                continue;
            }
            for row in attack_rows(attack, n_z, n_x, &mut rng) {
                if row < n_z {
                    measurements[k][row] += attack.magnitude * variances.get(measurement_layout[row].1).sqrt();
                } else {
                    perturbations[k].get_or_insert_with(StepPerturbation::default).bias_sd.push((row - n_z, attack.magnitude));
                }
            }
        }
    }
    Ok(PreparedRun { system, truth, measurements, perturbations, state_layout, measurement_layout })
}

fn build_filter(kind: FilterKind, spec: &ScenarioSpec, prepared: &PreparedRun) -> Result<Box<dyn Estimator>> {
    let model = PowerSystemModel::new(
        prepared.system.clone(),
        &spec.process_noise,
        &spec.measurement_variances(),
        spec.filter_step,
    )?;
    let initial = initial_belief(prepared.system.equilibrium(), spec.init_error);
    let t0 = prepared.truth.times[0];
    Ok(match kind {
        FilterKind::Ukf => Box::new(Ukf::new(model, initial, t0, SigmaParams::default(), spec.divergence)?),
        FilterKind::GmUkf => {
            let config = GmUkfConfig { huber: spec.huber, sigma: SigmaParams::default(), divergence: spec.divergence };
            Box::new(GmUkf::new(model, initial, t0, config)?)
        }
    })
}

/// Runs one filter over a prepared realisation.
pub fn run_filter(kind: FilterKind, spec: &ScenarioSpec, prepared: &PreparedRun) -> Result<FilterRun> {
    let mut filter = build_filter(kind, spec, prepared)?;
    let n = prepared.truth.len();
    let mut run = FilterRun {
        filter: kind,
        estimates: Vec::with_capacity(n),
        std_devs: Vec::with_capacity(n),
        mae: DVector::zeros(0),
        step_ms: Vec::with_capacity(n),
        diverged: false,
        diverged_at: None,
        divergence_reason: None,
        ps_flags: Vec::new(),
        ps_weights: Vec::new(),
        iterations: Vec::new(),
        nonconverged_steps: 0,
        nonmonotone_steps: 0,
        min_eigenvalues: Vec::new(),
        floored_steps: 0,
    };
    run.estimates.push(filter.belief().mean.clone());
    run.std_devs.push(filter.belief().std_devs());
    for k in 1..n {
        let t = prepared.truth.times[k];
        let was_diverged = filter.diverged();
        let d = filter.step(t, &prepared.measurements[k], prepared.perturbations[k].as_ref());
        if !was_diverged {
            run.step_ms.push(d.elapsed.as_secs_f64() * 1e3);
            if d.diverged {
                run.diverged = true;
                run.diverged_at = Some(t);
                run.divergence_reason = d.error.clone();
            } else {
                run.iterations.push(d.iterations);
                run.min_eigenvalues.push(d.min_eigenvalue);
                run.nonconverged_steps += usize::from(!d.converged);
                run.nonmonotone_steps += usize::from(!d.objective_monotone);
                run.floored_steps += usize::from(d.floored);
            }
        }
        if kind == FilterKind::GmUkf {
            run.ps_flags.push(d.ps_flags);
            run.ps_weights.push(d.ps_weights);
        }
        run.estimates.push(filter.belief().mean.clone());
        run.std_devs.push(filter.belief().std_devs());
    }
    run.mae = mae(&run.estimates[1..], &prepared.truth.states[1..])?;
    Ok(run)
}

/// Runs every filter selected by the scenario on one realisation.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<RunResult> {
    let prepared = prepare(spec)?;
    let filters = spec.filters.iter().map(|&k| run_filter(k, spec, &prepared)).collect::<Result<Vec<_>>>()?;
    Ok(RunResult {
        scenario: spec.name.clone(),
        seed: spec.seed,
        times: prepared.truth.times.clone(),
        truth: prepared.truth.states.clone(),
        measurements: prepared.measurements,
        state_labels: prepared.truth.state_labels.clone(),
        measurement_labels: prepared.truth.measurement_labels.clone(),
        state_layout: prepared.state_layout,
        measurement_layout: prepared.measurement_layout,
        filters,
    })
}

/// Runs the scenario once per seed on at most `jobs` threads (0 = all
/// cores). Results keep the order of `seeds`.
pub fn run_many(spec: &ScenarioSpec, seeds: &[u64], jobs: usize) -> Result<Vec<RunResult>> {
    if seeds.is_empty() {
        return Err(invalid("no seeds given"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| seeds.par_iter().map(|&s| run_scenario(&spec.with_seed(s))).collect())
}

/// Consecutive seeds starting at `base`.
pub fn seed_range(base: u64, reps: usize) -> Vec<u64> {
    (0..reps as u64).map(|i| base.wrapping_add(i)).collect()
}
