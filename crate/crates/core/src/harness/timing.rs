use serde::Serialize;

use super::run::RunResult;
use crate::filters::FilterKind;

/// Per-step budget at 30 samples per second (ms).
pub const BUDGET_30_SPS_MS: f64 = 1e3 / 30.0;
/// Per-step budget at 60 samples per second (ms).
pub const BUDGET_60_SPS_MS: f64 = 1e3 / 60.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub scenario: String,
    pub filter: String,
    pub steps: usize,
    pub mean_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub within_30_sps: bool,
    pub within_60_sps: bool,
}

/// Wall-clock step statistics per (scenario, filter) over all runs. The
/// budgets are checked against the mean step time.
pub fn timing_report(results: &[RunResult]) -> Vec<TimingRow> {
    let mut rows = Vec::new();
    let mut scenarios: Vec<&str> = Vec::new();
    for r in results {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }
    for scenario in scenarios {
        for kind in FilterKind::ALL {
            let mut ms: Vec<f64> = results
                .iter()
                .filter(|r| r.scenario == scenario)
                .filter_map(|r| r.filter(kind))
                .flat_map(|f| f.step_ms.iter().copied())
                .collect();
            if ms.is_empty() {
                continue;
            }
            ms.sort_by(f64::total_cmp);
            let mean = ms.iter().sum::<f64>() / ms.len() as f64;
            let p99 = ms[((ms.len() as f64 * 0.99).ceil() as usize).clamp(1, ms.len()) - 1];
            rows.push(TimingRow {
                scenario: scenario.to_string(),
                filter: kind.label().to_string(),
                steps: ms.len(),
                mean_ms: mean,
                p99_ms: p99,
                max_ms: *ms.last().unwrap(),
                within_30_sps: mean <= BUDGET_30_SPS_MS,
                within_60_sps: mean <= BUDGET_60_SPS_MS,
            });
        }
    }
    rows
}
