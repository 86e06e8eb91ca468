use serde::Serialize;

use super::metrics::mae_ratio;
use super::run::run_many;
use super::scenario::{RowAttack, ScenarioSpec};
use crate::error::{invalid, Result};
use crate::filters::FilterKind;

/// A fraction is safe when the attacked MAE stays within this multiple of
/// the clean-run MAE.
pub const SAFETY_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownPoint {
    pub fraction: f64,
    /// Attacked-over-clean MAE ratio per seed (infinite when diverged).
    pub ratios: Vec<f64>,
    /// Mean attacked MAE over states and seeds.
    pub mean_mae: f64,
    pub safe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownReport {
    pub filter: String,
    /// Largest fraction such that it and every smaller swept fraction are safe.
    pub max_safe_fraction: Option<f64>,
    pub points: Vec<BreakdownPoint>,
}

/// Sweeps the share of corrupted regression rows. `template.row_attack`
/// provides the window and bias magnitude (its fraction is overridden).
/// A fraction is safe when every seed keeps the state-averaged MAE ratio
/// against its own clean run at or below [`SAFETY_FACTOR`].
pub fn breakdown_sweep(
    template: &ScenarioSpec,
    fractions: &[f64],
    seeds: &[u64],
    filter: FilterKind,
    jobs: usize,
) -> Result<BreakdownReport> {
    if let Some(f) = fractions.iter().find(|f| !(**f >= 0.0 && **f < 0.5)) {
        return Err(invalid(format!("breakdown fraction {f} outside [0, 0.5)")));
    }
    let attack = template.row_attack.clone().ok_or_else(|| invalid("breakdown template needs a row_attack"))?;
    let base = ScenarioSpec { filters: vec![filter], ..template.clone() };
    let clean = run_many(&ScenarioSpec { row_attack: None, ..base.clone() }, seeds, jobs)?;
    let mut points = Vec::new();
    for &fraction in fractions {
        let spec = ScenarioSpec { row_attack: Some(RowAttack { fraction, ..attack.clone() }), ..base.clone() };
        let runs = if fraction == 0.0 { clean.clone() } else { run_many(&spec, seeds, jobs)? };
        let mut ratios = Vec::new();
        let mut total = 0.0;
        for (r, c) in runs.iter().zip(&clean) {
            let (fr, fc) = (r.filter(filter).unwrap(), c.filter(filter).unwrap());
            total += fr.mae.mean();
            ratios.push(if fr.diverged { f64::INFINITY } else { mae_ratio(&fr.mae, &fc.mae, &[])? });
        }
        let safe = ratios.iter().all(|&r| r <= SAFETY_FACTOR);
        points.push(BreakdownPoint { fraction, ratios, mean_mae: total / runs.len() as f64, safe });
    }
    let mut sorted: Vec<&BreakdownPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.fraction.total_cmp(&b.fraction));
    let max_safe_fraction = sorted.iter().take_while(|p| p.safe).last().map(|p| p.fraction);
    Ok(BreakdownReport { filter: filter.label().to_string(), max_safe_fraction, points })
}
