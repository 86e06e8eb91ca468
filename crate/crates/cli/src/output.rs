use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gmukf_core::dynamics::StateKind;
use gmukf_core::harness::{class_mae, FilterRun, RunResult, TimingRow};
use gmukf_core::FilterKind;
use serde::Serialize;

/// Version of the summary layout described by `schema/summary.schema.json`.
pub const SUMMARY_VERSION: u32 = 1;

/// State kinds shown in the trajectory plot data.
pub const PLOT_STATES: [StateKind; 4] =
    [StateKind::RotorAngle, StateKind::RotorSpeed, StateKind::FieldVoltage, StateKind::MechanicalPower];

/// Creates `dir` and checks that files can be written into it.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let probe = dir.join(".gmukf-write-test");
    fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", dir.display()))?;
    fs::remove_file(&probe).ok();
    Ok(())
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// Regression-row labels: measurements, then the prior of every state.
pub fn regression_row_labels(run: &RunResult) -> Vec<String> {
    run.measurement_labels.iter().cloned().chain(run.state_labels.iter().map(|s| format!("prior_{s}"))).collect()
}

/// Header of a run CSV: `time`, `true_<state>`, `<filter>_<state>` per
/// filter, then `ps_flag_<row>` when the GM-UKF ran.
pub fn run_csv_header(run: &RunResult) -> Vec<String> {
    let mut header = vec!["time".to_string()];
    header.extend(run.state_labels.iter().map(|s| format!("true_{s}")));
    for f in &run.filters {
        header.extend(run.state_labels.iter().map(|s| format!("{}_{s}", f.filter.label())));
    }
    if run.filter(FilterKind::GmUkf).is_some() {
        header.extend(regression_row_labels(run).iter().map(|r| format!("ps_flag_{r}")));
    }
    header
}

pub fn write_run_csv(path: &Path, run: &RunResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(run_csv_header(run))?;
    let gm = run.filter(FilterKind::GmUkf);
    let n_rows = run.measurement_labels.len() + run.state_labels.len();
    for (k, t) in run.times.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(run.truth[k].iter().map(f64::to_string));
        for f in &run.filters {
            rec.extend(f.estimates[k].iter().map(f64::to_string));
        }
        if let Some(g) = gm {
            // no flags exist for the initial sample
            match k.checked_sub(1).and_then(|i| g.ps_flags.get(i)) {
                Some(flags) => rec.extend(flags.iter().map(|&b| u8::from(b).to_string())),
                None => rec.extend(std::iter::repeat_n("0".to_string(), n_rows)),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

fn filter_runs(results: &[RunResult], kind: FilterKind) -> Vec<&FilterRun> {
    results.iter().filter_map(|r| r.filter(kind)).collect()
}

/// Per-state MAE statistics over repetitions, one row per filter and state.
pub fn write_aggregate_csv(path: &Path, results: &[RunResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["filter", "state", "mae_mean", "mae_std", "mae_min", "mae_max", "runs", "diverged_runs"])?;
    let labels = &results[0].state_labels;
    for kind in FilterKind::ALL {
        let runs = filter_runs(results, kind);
        if runs.is_empty() {
            continue;
        }
        let diverged = runs.iter().filter(|f| f.diverged).count();
        for (j, label) in labels.iter().enumerate() {
            let v: Vec<f64> = runs.iter().map(|f| f.mae[j]).collect();
            let (mean, sd) = mean_sd(&v);
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            w.write_record([
                kind.label().to_string(),
                label.clone(),
                mean.to_string(),
                sd.to_string(),
                lo.to_string(),
                hi.to_string(),
                runs.len().to_string(),
                diverged.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Estimated and true angle, speed, field voltage and mechanical power
/// over time for one run.
pub fn write_trajectory_plot(path: &Path, run: &RunResult) -> Result<()> {
    let cols: Vec<usize> = (0..run.state_layout.len()).filter(|&j| PLOT_STATES.contains(&run.state_layout[j].1)).collect();
    let mut w = writer(path)?;
    let mut header = vec!["time".to_string()];
    header.extend(cols.iter().map(|&j| format!("true_{}", run.state_labels[j])));
    for f in &run.filters {
        header.extend(cols.iter().map(|&j| format!("{}_{}", f.filter.label(), run.state_labels[j])));
    }
    w.write_record(&header)?;
    for (k, t) in run.times.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(cols.iter().map(|&j| run.truth[k][j].to_string()));
        for f in &run.filters {
            rec.extend(cols.iter().map(|&j| f.estimates[k][j].to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// MAE per filter and state class, averaged over repetitions (bar data).
pub fn write_mae_plot(path: &Path, results: &[RunResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["filter", "class", "mae_mean", "mae_std"])?;
    let layout = &results[0].state_layout;
    for kind in FilterKind::ALL {
        let runs = filter_runs(results, kind);
        if runs.is_empty() {
            continue;
        }
        for class in StateKind::ALL.iter().filter(|c| layout.iter().any(|(_, k)| k == *c)) {
            let v: Vec<f64> = runs.iter().map(|f| class_mae(&f.mae, layout, *class)).collect();
            let (mean, sd) = mean_sd(&v);
            w.write_record([kind.label(), class.label(), &mean.to_string(), &sd.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FilterSummary {
    pub filter: String,
    /// Per-state MAE in the order of the scenario's `states`.
    pub mae: Vec<f64>,
    pub mae_mean: f64,
    pub class_mae: BTreeMap<String, f64>,
    pub diverged: bool,
    pub diverged_at: Option<f64>,
    pub divergence_reason: Option<String>,
    pub nonconverged_steps: usize,
    pub nonmonotone_steps: usize,
    pub floored_steps: usize,
    pub mean_step_ms: f64,
    pub max_step_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub csv: String,
    pub filters: Vec<FilterSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateSummary {
    pub filter: String,
    pub runs: usize,
    pub diverged_runs: usize,
    pub mae_mean: f64,
    /// Per-state MAE averaged over repetitions.
    pub mae: Vec<f64>,
    pub class_mae: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub seeds: Vec<u64>,
    pub states: Vec<String>,
    pub runs: Vec<RunSummary>,
    pub aggregate: Vec<AggregateSummary>,
    pub aggregate_csv: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: u32,
    pub scenarios: Vec<ScenarioSummary>,
    pub timing: Vec<TimingRow>,
}

fn class_table(mae: &gmukf_core::nalgebra::DVector<f64>, run: &RunResult) -> BTreeMap<String, f64> {
    StateKind::ALL
        .iter()
        .filter(|c| run.state_layout.iter().any(|(_, k)| k == *c))
        .map(|c| (c.label().to_string(), class_mae(mae, &run.state_layout, *c)))
        .collect()
}

pub fn filter_summary(run: &RunResult, f: &FilterRun) -> FilterSummary {
    FilterSummary {
        filter: f.filter.label().to_string(),
        mae: f.mae.iter().copied().collect(),
        mae_mean: f.mae.mean(),
        class_mae: class_table(&f.mae, run),
        diverged: f.diverged,
        diverged_at: f.diverged_at,
        divergence_reason: f.divergence_reason.clone(),
        nonconverged_steps: f.nonconverged_steps,
        nonmonotone_steps: f.nonmonotone_steps,
        floored_steps: f.floored_steps,
        mean_step_ms: f.mean_step_ms(),
        max_step_ms: f.max_step_ms(),
    }
}

pub fn aggregate(results: &[RunResult]) -> Vec<AggregateSummary> {
    let mut out = Vec::new();
    for kind in FilterKind::ALL {
        let runs = filter_runs(results, kind);
        if runs.is_empty() {
            continue;
        }
        let mut mae = gmukf_core::nalgebra::DVector::zeros(runs[0].mae.len());
        for f in &runs {
            mae += &f.mae;
        }
        mae /= runs.len() as f64;
        out.push(AggregateSummary {
            filter: kind.label().to_string(),
            runs: runs.len(),
            diverged_runs: runs.iter().filter(|f| f.diverged).count(),
            mae_mean: mae.mean(),
            class_mae: class_table(&mae, &results[0]),
            mae: mae.iter().copied().collect(),
        });
    }
    out
}

/// Output locations inside the run directory.
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn run_csv(&self, scenario: &str, seed: u64) -> PathBuf {
        self.root.join("runs").join(format!("{scenario}_seed{seed}.csv"))
    }

    pub fn aggregate_csv(&self, scenario: &str) -> PathBuf {
        self.root.join("runs").join(format!("{scenario}_aggregate.csv"))
    }

    pub fn trajectory_plot(&self, scenario: &str) -> PathBuf {
        self.root.join("plots").join(format!("{scenario}_trajectories.csv"))
    }

    pub fn mae_plot(&self, scenario: &str) -> PathBuf {
        self.root.join("plots").join(format!("{scenario}_mae.csv"))
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.json")
    }

    /// Path relative to the run directory, as recorded in the summary.
    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root).unwrap_or(path).display().to_string()
    }
}
