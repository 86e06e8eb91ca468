//! Scenario harness: truth simulation, noise and corruption injection,
//! filter runs, metrics, breakdown sweeps and timing.

mod breakdown;
mod cases;
mod inject;
mod metrics;
mod run;
mod scenario;
mod timing;

pub use breakdown::{breakdown_sweep, BreakdownPoint, BreakdownReport, SAFETY_FACTOR};
pub use cases::{builtin_case, BUILTIN_CASES, STRESSED_LOAD_FACTOR, TARGET_GENERATOR};
pub use inject::{inject, perturbation_schedule, Stage};
pub use metrics::{class_mae, generator_mae, generator_states, mae, mae_ratio};
pub use run::{
    initial_belief, prepare, run_filter, run_many, run_scenario, seed_range, FilterRun, PreparedRun, RunResult,
    STREAM_INJECTION, STREAM_NOISE, STREAM_ROW_ATTACK,
};
pub use scenario::{
    ChannelNoise, Injection, InjectionKind, LoadScale, OutlierMode, RowAttack, ScenarioSpec, SystemSpec, NOMINAL_VARIANCES,
};
pub use timing::{timing_report, TimingRow, BUDGET_30_SPS_MS, BUDGET_60_SPS_MS};
