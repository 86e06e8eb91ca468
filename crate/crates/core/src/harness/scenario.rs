use serde::{Deserialize, Serialize};

use crate::dynamics::{wscc, ChannelClass, MachineModel, NetworkEvent, StateKind, SystemConfig, SAMPLE_INTERVAL};
use crate::error::{invalid, Result};
use crate::filters::{ChannelVariances, DivergenceConfig, FilterKind, ProcessNoise};
use crate::noise::{MixtureComponent, NoiseSpec};
use crate::robust_stats::HuberConfig;

/// Load multiplier applied to the base case before the power flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadScale {
    pub bus: usize,
    pub factor: f64,
}

/// Where the simulated system comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// The built-in WSCC 3-machine 9-bus system.
    Wscc9 {
        #[serde(default = "one")]
        power_scale: f64,
        #[serde(default)]
        model: MachineModel,
        #[serde(default)]
        load_scale: Vec<LoadScale>,
        #[serde(default)]
        events: Vec<NetworkEvent>,
    },
    /// A fully specified network and machine set.
    Custom { config: SystemConfig },
}

fn one() -> f64 {
    1.0
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec::Wscc9 {
            power_scale: 1.0,
            model: MachineModel::TwoAxis,
            load_scale: Vec::new(),
            events: vec![wscc::line_trip(0.5)],
        }
    }
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemConfig> {
        match self {
            SystemSpec::Wscc9 { power_scale, model, load_scale, events } => {
                if !(*power_scale > 0.0 && power_scale.is_finite()) {
                    return Err(invalid(format!("power_scale must be positive, got {power_scale}")));
                }
                let mut cfg = wscc::wscc9(*power_scale, *model, events.clone());
                for ls in load_scale {
                    let i = cfg.network.bus_index(ls.bus)?;
                    if !(ls.factor >= 0.0 && ls.factor.is_finite()) {
                        return Err(invalid(format!("load factor for bus {} must be non-negative", ls.bus)));
                    }
                    cfg.network.buses[i].p_load *= ls.factor;
                    cfg.network.buses[i].q_load *= ls.factor;
                }
                Ok(cfg)
            }
            SystemSpec::Custom { config } => Ok(config.clone()),
        }
    }
}

/// Measurement noise per channel class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelNoise {
    pub vm: NoiseSpec,
    pub va: NoiseSpec,
    pub p: NoiseSpec,
    pub q: NoiseSpec,
}

/// Filter-side measurement variances of the Laplace/mixture setting, used
/// for channels whose noise has no variance.
pub const NOMINAL_VARIANCES: ChannelVariances = ChannelVariances { vm: 1.9e-4, va: 1e-4, p: 0.08, q: 0.08 };

impl Default for ChannelNoise {
    fn default() -> Self {
        Self::laplace_case()
    }
}

impl ChannelNoise {
    /// Gaussian angles, bimodal mixture magnitudes, Laplace powers.
    pub fn laplace_case() -> Self {
        Self {
            vm: NoiseSpec::GaussianMixture {
                components: vec![
                    MixtureComponent { weight: 0.9, mean: 0.0, variance: 1e-4 },
                    MixtureComponent { weight: 0.1, mean: 0.0, variance: 1e-3 },
                ],
            },
            va: NoiseSpec::gaussian(1e-2),
            p: NoiseSpec::Laplace { mu: 0.0, b: 0.2 },
            q: NoiseSpec::Laplace { mu: 0.0, b: 0.2 },
        }
    }

    /// As [`ChannelNoise::laplace_case`] with Cauchy powers.
    pub fn cauchy_case(alpha: f64) -> Self {
        Self {
            p: NoiseSpec::Cauchy { beta: 0.0, alpha },
            q: NoiseSpec::Cauchy { beta: 0.0, alpha },
            ..Self::laplace_case()
        }
    }

    /// Zero-mean Gaussian noise on every channel.
    pub fn gaussian(vm: f64, va: f64, p: f64, q: f64) -> Self {
        Self { vm: NoiseSpec::gaussian(vm), va: NoiseSpec::gaussian(va), p: NoiseSpec::gaussian(p), q: NoiseSpec::gaussian(q) }
    }

    pub fn get(&self, class: ChannelClass) -> &NoiseSpec {
        match class {
            ChannelClass::VoltageMagnitude => &self.vm,
            ChannelClass::VoltageAngle => &self.va,
            ChannelClass::ActivePower => &self.p,
            ChannelClass::ReactivePower => &self.q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, spec) in [("vm", &self.vm), ("va", &self.va), ("p", &self.p), ("q", &self.q)] {
            spec.validate().map_err(|e| invalid(format!("noise.{name}: {e}")))?;
        }
        Ok(())
    }

    /// Variances the filter assumes: the true variance where it exists,
    /// the nominal one otherwise.
    pub fn nominal_variances(&self) -> ChannelVariances {
        let pick = |spec: &NoiseSpec, fallback: f64| spec.variance().unwrap_or(fallback);
        ChannelVariances {
            vm: pick(&self.vm, NOMINAL_VARIANCES.vm),
            va: pick(&self.va, NOMINAL_VARIANCES.va),
            p: pick(&self.p, NOMINAL_VARIANCES.p),
            q: pick(&self.q, NOMINAL_VARIANCES.q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    ObservationOutlier,
    InnovationOutlier,
    MeasurementLoss,
    ReplayAttack,
    BiasInjection,
}

/// How an observation outlier of magnitude `m` corrupts a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierMode {
    /// True value multiplied by `1 + m` before noise is added.
    #[default]
    Multiplicative,
    /// `m` per unit added to the true value before noise is added.
    Additive,
}

/// A scheduled corruption of measurements or predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub kind: InjectionKind,
    /// Generator numbers, starting at 1.
    pub generators: Vec<usize>,
    /// Targeted channels (measurement kinds); empty selects all four.
    #[serde(default)]
    pub channels: Vec<ChannelClass>,
    /// Targeted states (innovation outliers); empty selects the rotor angle.
    #[serde(default)]
    pub states: Vec<StateKind>,
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub magnitude: f64,
    #[serde(default)]
    pub mode: OutlierMode,
    /// Replay attacks: how far back the replayed window starts (s).
    /// Defaults to the window length.
    #[serde(default)]
    pub replay_lag: Option<f64>,
}

impl Injection {
    pub fn window(kind: InjectionKind, generators: Vec<usize>, start: f64, end: f64, magnitude: f64) -> Self {
        Self {
            kind,
            generators,
            channels: Vec::new(),
            states: Vec::new(),
            start,
            end,
            magnitude,
            mode: OutlierMode::default(),
            replay_lag: None,
        }
    }

    pub fn with_channels(mut self, channels: Vec<ChannelClass>) -> Self {
        self.channels = channels;
        self
    }

    pub fn with_states(mut self, states: Vec<StateKind>) -> Self {
        self.states = states;
        self
    }

    pub fn active(&self, t: f64) -> bool {
        t >= self.start - 1e-9 && t <= self.end + 1e-9
    }

    pub fn target_channels(&self) -> Vec<ChannelClass> {
        if self.channels.is_empty() {
            ChannelClass::ALL.to_vec()
        } else {
            self.channels.clone()
        }
    }

    pub fn target_states(&self) -> Vec<StateKind> {
        if self.states.is_empty() {
            vec![StateKind::RotorAngle]
        } else {
            self.states.clone()
        }
    }

    pub fn validate(&self, horizon: f64, n_generators: usize) -> Result<()> {
        if !(self.start >= 0.0 && self.end >= self.start && self.end <= horizon + 1e-9) {
            return Err(invalid(format!(
                "injection window [{}, {}] outside the horizon [0, {horizon}]",
                self.start, self.end
            )));
        }
        if !self.magnitude.is_finite() {
            return Err(invalid("injection magnitude must be finite"));
        }
        if self.generators.is_empty() {
            return Err(invalid("injection targets no generator"));
        }
        if let Some(g) = self.generators.iter().find(|&&g| g == 0 || g > n_generators) {
            return Err(invalid(format!("injection targets generator {g}, system has {n_generators}")));
        }
        if self.kind == InjectionKind::ReplayAttack {
            let lag = self.replay_lag.unwrap_or(self.end - self.start);
            if !(lag > 0.0 && self.start - lag >= -1e-9) {
                return Err(invalid("replay window must lie after a recorded window of the same length"));
            }
        }
        Ok(())
    }
}

/// Random rows of the batch regression replaced by large biases every
/// step of a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowAttack {
    /// Share of the `n_z + n_x` regression rows corrupted per step, or of
    /// the `n_z` measurement rows with `measurements_only`.
    pub fraction: f64,
    /// Bias in standard deviations of the corrupted row.
    pub magnitude: f64,
    pub start: f64,
    pub end: f64,
    /// Leave the predicted-state rows alone.
    #[serde(default)]
    pub measurements_only: bool,
}

impl RowAttack {
    pub fn validate(&self, horizon: f64) -> Result<()> {
        if !(0.0..0.5).contains(&self.fraction) {
            return Err(invalid(format!("row attack fraction {} outside [0, 0.5)", self.fraction)));
        }
        if !(self.start >= 0.0 && self.end >= self.start && self.end <= horizon + 1e-9) {
            return Err(invalid("row attack window outside the horizon"));
        }
        if !self.magnitude.is_finite() {
            return Err(invalid("row attack magnitude must be finite"));
        }
        Ok(())
    }
}

/// One experiment: system, noise, corruptions and filter tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub system: SystemSpec,
    pub noise: ChannelNoise,
    /// Measurement variances assumed by the filters; defaults to
    /// [`ChannelNoise::nominal_variances`].
    pub filter_variances: Option<ChannelVariances>,
    pub process_noise: ProcessNoise,
    pub huber: HuberConfig,
    pub divergence: DivergenceConfig,
    pub injections: Vec<Injection>,
    pub row_attack: Option<RowAttack>,
    /// Relative error of the initial state estimate.
    pub init_error: f64,
    pub horizon: f64,
    pub sample_rate: f64,
    /// RK4 step of the filters' process model (s).
    pub filter_step: f64,
    /// Truth simulation fails when a speed deviation exceeds this (pu).
    pub speed_limit: f64,
    pub seed: u64,
    pub filters: Vec<FilterKind>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            system: SystemSpec::default(),
            noise: ChannelNoise::default(),
            filter_variances: None,
            process_noise: ProcessNoise::default(),
            huber: HuberConfig::default(),
            divergence: DivergenceConfig::default(),
            injections: Vec::new(),
            row_attack: None,
            init_error: 0.10,
            horizon: 10.0,
            sample_rate: 1.0 / SAMPLE_INTERVAL,
            filter_step: 0.01,
            speed_limit: 0.2,
            seed: 0,
            filters: FilterKind::ALL.to_vec(),
        }
    }
}

impl ScenarioSpec {
    pub fn sample_interval(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn measurement_variances(&self) -> ChannelVariances {
        self.filter_variances.unwrap_or_else(|| self.noise.nominal_variances())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// Checks everything that does not need the power flow.
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(invalid(format!("sample_rate must be positive, got {}", self.sample_rate)));
        }
        if !(self.filter_step > 0.0 && self.filter_step <= self.sample_interval() + 1e-12) {
            return Err(invalid("filter_step must be positive and no longer than the sample interval"));
        }
        if !(self.init_error >= 0.0 && self.init_error < 1.0) {
            return Err(invalid(format!("init_error must lie in [0, 1), got {}", self.init_error)));
        }
        if !(self.speed_limit > 0.0) {
            return Err(invalid("speed_limit must be positive"));
        }
        self.noise.validate()?;
        self.process_noise.validate()?;
        self.huber.validate()?;
        if let Some(v) = &self.filter_variances {
            v.validate()?;
        }
        if let SystemSpec::Wscc9 { events, .. } = &self.system {
            validate_events(events, self.horizon)?;
        }
        if let SystemSpec::Custom { config } = &self.system {
            validate_events(&config.events, self.horizon)?;
        }
        let n_gen = self.system.build()?.generators.len();
        for inj in &self.injections {
            inj.validate(self.horizon, n_gen)?;
        }
        if let Some(a) = &self.row_attack {
            a.validate(self.horizon)?;
        }
        if self.filters.is_empty() {
            return Err(invalid("no filter selected"));
        }
        Ok(())
    }
}

fn validate_events(events: &[NetworkEvent], horizon: f64) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for e in events {
        if !(e.time >= 0.0 && e.time <= horizon) {
            return Err(invalid(format!("event at t = {} outside the horizon", e.time)));
        }
        if e.time < prev {
            return Err(invalid("events must be time-ordered"));
        }
        prev = e.time;
    }
    Ok(())
}
