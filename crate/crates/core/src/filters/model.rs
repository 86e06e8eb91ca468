use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{ChannelClass, PowerSystem, StateKind};
use crate::error::{invalid, Result};

/// Discrete-time state-space model `x_k = f(x_{k-1}) + w_k`,
/// `z_k = h(x_k) + v_k` with the noise covariances the filter assumes.
pub trait SystemModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn measurement_dim(&self) -> usize;
    /// Propagates a state from time `t` over `dt` seconds.
    fn transition(&self, x: &DVector<f64>, t: f64, dt: f64) -> Result<DVector<f64>>;
    /// Noise-free measurement of a state at time `t`.
    fn observe(&self, x: &DVector<f64>, t: f64) -> Result<DVector<f64>>;
    fn process_noise(&self) -> &DMatrix<f64>;
    fn measurement_noise(&self) -> &DMatrix<f64>;
}

/// Linear time-invariant model `x_k = A x_{k-1}`, `z_k = C x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>, c: DMatrix<f64>, q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let m = c.nrows();
        if a.ncols() != n || c.ncols() != n || q.shape() != (n, n) || r.shape() != (m, m) {
            return Err(invalid("inconsistent linear model dimensions"));
        }
        Ok(Self { a, c, q, r })
    }
}

impl SystemModel for LinearModel {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn measurement_dim(&self) -> usize {
        self.c.nrows()
    }

    fn transition(&self, x: &DVector<f64>, _t: f64, _dt: f64) -> Result<DVector<f64>> {
        Ok(&self.a * x)
    }

    fn observe(&self, x: &DVector<f64>, _t: f64) -> Result<DVector<f64>> {
        Ok(&self.c * x)
    }

    fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }

    fn measurement_noise(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// Diagonal process-noise variances per state class (pu^2 or rad^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessNoise {
    pub angle: f64,
    pub speed: f64,
    /// Transient EMFs.
    pub flux: f64,
    /// Field voltage and mechanical power.
    pub control: f64,
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self { angle: 1e-6, speed: 1e-6, flux: 1e-6, control: 1e-6 }
    }
}

impl ProcessNoise {
    pub fn variance(&self, kind: StateKind) -> f64 {
        match kind {
            StateKind::RotorAngle => self.angle,
            StateKind::RotorSpeed => self.speed,
            StateKind::EqPrime | StateKind::EdPrime => self.flux,
            StateKind::FieldVoltage | StateKind::MechanicalPower => self.control,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.angle, self.speed, self.flux, self.control] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("process noise variance must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Measurement-noise variances the filter assumes per channel class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelVariances {
    pub vm: f64,
    pub va: f64,
    pub p: f64,
    pub q: f64,
}

impl ChannelVariances {
    pub fn get(&self, class: ChannelClass) -> f64 {
        match class {
            ChannelClass::VoltageMagnitude => self.vm,
            ChannelClass::VoltageAngle => self.va,
            ChannelClass::ActivePower => self.p,
            ChannelClass::ReactivePower => self.q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.vm, self.va, self.p, self.q] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("measurement variance must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// The multi-machine simulator seen through the filter: RK4 propagation
/// with a configurable step, PMU measurements at every generator terminal.
#[derive(Debug, Clone)]
pub struct PowerSystemModel {
    system: Arc<PowerSystem>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    step: f64,
}

impl PowerSystemModel {
    pub fn new(system: Arc<PowerSystem>, process: &ProcessNoise, channels: &ChannelVariances, step: f64) -> Result<Self> {
        process.validate()?;
        channels.validate()?;
        if !(step > 0.0) {
            return Err(invalid(format!("filter integration step must be positive, got {step}")));
        }
        let q = DVector::from_iterator(
            system.state_dim(),
            system.state_layout().into_iter().map(|(_, kind)| process.variance(kind)),
        );
        let r = DVector::from_iterator(
            system.measurement_dim(),
            system.measurement_layout().into_iter().map(|(_, class)| channels.get(class)),
        );
        Ok(Self { system, q: DMatrix::from_diagonal(&q), r: DMatrix::from_diagonal(&r), step })
    }

    pub fn system(&self) -> &PowerSystem {
        &self.system
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

impl SystemModel for PowerSystemModel {
    fn state_dim(&self) -> usize {
        self.system.state_dim()
    }

    fn measurement_dim(&self) -> usize {
        self.system.measurement_dim()
    }

    fn transition(&self, x: &DVector<f64>, t: f64, dt: f64) -> Result<DVector<f64>> {
        self.system.propagate(x, t, dt, self.step)
    }

    fn observe(&self, x: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        self.system.measure_at(x, t)
    }

    fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }

    fn measurement_noise(&self) -> &DMatrix<f64> {
        &self.r
    }
}
