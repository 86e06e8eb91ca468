//! Command-line scenario runner: reads scenario files or built-in cases,
//! runs the filters over seeded repetitions and writes CSV and JSON
//! results.

pub mod config;
pub mod output;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use gmukf_core::harness::{builtin_case, run_many, seed_range, timing_report, ScenarioSpec, BUILTIN_CASES};
use gmukf_core::FilterKind;
use log::{info, warn};

use output::{Layout, RunSummary, ScenarioSummary, Summary, SUMMARY_VERSION};

fn parse_filter(s: &str) -> Result<FilterKind, String> {
    FilterKind::parse(s).map_err(|e| e.to_string())
}

fn existing_file(s: &str) -> Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

fn known_case(s: &str) -> Result<String, String> {
    if BUILTIN_CASES.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("unknown case '{s}', expected one of {}", BUILTIN_CASES.join(", ")))
    }
}

/// Runs GM-UKF and UKF scenarios and writes per-run CSV, summary JSON and
/// plot data.
#[derive(Debug, Clone, Parser)]
#[command(name = "gmukf", version, about)]
pub struct RunManifest {
    /// Scenario file (TOML); may be repeated.
    #[arg(long = "config", value_name = "PATH", value_parser = existing_file)]
    pub configs: Vec<PathBuf>,
    /// Built-in scenario; may be repeated.
    #[arg(long = "case", value_name = "NAME", value_parser = known_case)]
    pub cases: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "gmukf-out")]
    pub out: PathBuf,
    /// Comma-separated filters to run (ukf, gm_ukf); defaults to each
    /// scenario's own selection.
    #[arg(long, value_delimiter = ',', value_parser = parse_filter)]
    pub filters: Option<Vec<FilterKind>>,
    /// Repetitions per scenario, with consecutive seeds.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// First seed; defaults to each scenario's own.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 uses every core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

/// Initializes logging from `GMUKF_LOG` (default `info`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("GMUKF_LOG", "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Scenarios named by the manifest, in order: files first, then cases.
pub fn collect_scenarios(manifest: &RunManifest) -> Result<Vec<ScenarioSpec>> {
    let mut specs = Vec::new();
    for path in &manifest.configs {
        specs.extend(config::parse_config(path)?);
    }
    for name in &manifest.cases {
        specs.push(builtin_case(name)?);
    }
    if specs.is_empty() {
        bail!("nothing to run: give --config or --case");
    }
    if let Some(filters) = &manifest.filters {
        if filters.is_empty() {
            bail!("--filters is empty");
        }
        for s in specs.iter_mut() {
            s.filters = filters.clone();
        }
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = specs.iter().find(|s| !seen.insert(s.name.clone())) {
        bail!("scenario '{}' is given twice", dup.name);
    }
    Ok(specs)
}

pub fn run(manifest: &RunManifest) -> Result<Summary> {
    let specs = collect_scenarios(manifest)?;
    output::ensure_writable(&manifest.out)?;
    let layout = Layout { root: manifest.out.clone() };
    let mut scenarios = Vec::new();
    let mut all = Vec::new();
    for spec in &specs {
        let seeds = seed_range(manifest.seed.unwrap_or(spec.seed), manifest.reps as usize);
        info!("{}: {} run(s), filters {:?}", spec.name, seeds.len(), spec.filters);
        let results = run_many(spec, &seeds, manifest.jobs).with_context(|| format!("scenario '{}'", spec.name))?;
        let mut runs = Vec::new();
        for r in &results {
            let path = layout.run_csv(&spec.name, r.seed);
            output::write_run_csv(&path, r)?;
            for f in r.filters.iter().filter(|f| f.diverged) {
                warn!(
                    "{} seed {}: {} diverged at t = {:?}: {}",
                    spec.name,
                    r.seed,
                    f.filter.label(),
                    f.diverged_at,
                    f.divergence_reason.as_deref().unwrap_or("")
                );
            }
            runs.push(RunSummary {
                seed: r.seed,
                csv: layout.relative(&path),
                filters: r.filters.iter().map(|f| output::filter_summary(r, f)).collect(),
            });
        }
        let aggregate_path = layout.aggregate_csv(&spec.name);
        output::write_aggregate_csv(&aggregate_path, &results)?;
        output::write_trajectory_plot(&layout.trajectory_plot(&spec.name), &results[0])?;
        output::write_mae_plot(&layout.mae_plot(&spec.name), &results)?;
        scenarios.push(ScenarioSummary {
            name: spec.name.clone(),
            seeds,
            states: results[0].state_labels.clone(),
            runs,
            aggregate: output::aggregate(&results),
            aggregate_csv: layout.relative(&aggregate_path),
        });
        all.extend(results);
    }
    let summary = Summary { version: SUMMARY_VERSION, scenarios, timing: timing_report(&all) };
    let path = layout.summary();
    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(summary)
}
