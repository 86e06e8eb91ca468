//! Synchronous machine models and the stator/network interface.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::network::C64;
use crate::error::{invalid, Error, Result};

/// Machine dynamic model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineModel {
    /// Two-axis machine with first-order exciter and turbine-governor:
    /// six states per machine.
    #[default]
    TwoAxis,
    /// Constant voltage behind transient reactance: two states per machine.
    Classical,
}

impl MachineModel {
    pub fn states_per_machine(self) -> usize {
        match self {
            MachineModel::TwoAxis => 6,
            MachineModel::Classical => 2,
        }
    }
}

/// Per-machine state variables, in their order inside the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    RotorAngle,
    /// Speed deviation from synchronous speed, per unit.
    RotorSpeed,
    EqPrime,
    EdPrime,
    FieldVoltage,
    MechanicalPower,
}

impl StateKind {
    pub const ALL: [StateKind; 6] = [
        StateKind::RotorAngle,
        StateKind::RotorSpeed,
        StateKind::EqPrime,
        StateKind::EdPrime,
        StateKind::FieldVoltage,
        StateKind::MechanicalPower,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StateKind::RotorAngle => "delta",
            StateKind::RotorSpeed => "omega",
            StateKind::EqPrime => "eq_prime",
            StateKind::EdPrime => "ed_prime",
            StateKind::FieldVoltage => "efd",
            StateKind::MechanicalPower => "pm",
        }
    }

    pub fn kinds(model: MachineModel) -> &'static [StateKind] {
        match model {
            MachineModel::TwoAxis => &Self::ALL,
            MachineModel::Classical => &Self::ALL[..2],
        }
    }
}

/// Measurement channels recorded at each generator terminal, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelClass {
    VoltageMagnitude,
    VoltageAngle,
    ActivePower,
    ReactivePower,
}

impl ChannelClass {
    pub const ALL: [ChannelClass; 4] = [
        ChannelClass::VoltageMagnitude,
        ChannelClass::VoltageAngle,
        ChannelClass::ActivePower,
        ChannelClass::ReactivePower,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ChannelClass::VoltageMagnitude => "vm",
            ChannelClass::VoltageAngle => "va",
            ChannelClass::ActivePower => "p",
            ChannelClass::ReactivePower => "q",
        }
    }

    pub fn offset(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).unwrap()
    }
}

/// Machine constants in per unit on the system base; time constants in
/// seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub h: f64,
    pub d: f64,
    pub xd: f64,
    pub xq: f64,
    pub xd_prime: f64,
    pub xq_prime: f64,
    pub td0_prime: f64,
    pub tq0_prime: f64,
    /// Exciter gain and time constant.
    pub ka: f64,
    pub ta: f64,
    /// Governor droop (per unit speed per unit power) and time constant.
    pub droop: f64,
    pub tg: f64,
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("h", self.h),
            ("xd", self.xd),
            ("xq", self.xq),
            ("xd_prime", self.xd_prime),
            ("xq_prime", self.xq_prime),
            ("td0_prime", self.td0_prime),
            ("tq0_prime", self.tq0_prime),
            ("ka", self.ka),
            ("ta", self.ta),
            ("droop", self.droop),
            ("tg", self.tg),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("generator parameter {name} must be positive, got {v}")));
            }
        }
        if !(self.d >= 0.0) {
            return Err(invalid("damping must be non-negative"));
        }
        if self.xd_prime > self.xd || self.xq_prime > self.xq {
            return Err(invalid("transient reactances must not exceed synchronous reactances"));
        }
        Ok(())
    }

    /// Same machine expressed on a base `k` times smaller.
    pub fn rebased(&self, k: f64) -> Self {
        Self {
            h: self.h * k,
            d: self.d * k,
            xd: self.xd / k,
            xq: self.xq / k,
            xd_prime: self.xd_prime / k,
            xq_prime: self.xq_prime / k,
            droop: self.droop / k,
            ..self.clone()
        }
    }
}

/// Internal quantities of one machine needed by the stator solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Internal {
    pub delta: f64,
    pub ed: f64,
    pub eq: f64,
    pub xd_prime: f64,
    pub xq_prime: f64,
}

/// Stator currents and terminal quantities for all machines.
#[derive(Debug, Clone)]
pub struct StatorSolution {
    pub id: Vec<f64>,
    pub iq: Vec<f64>,
    pub vd: Vec<f64>,
    pub vq: Vec<f64>,
    pub v_terminal: Vec<C64>,
    pub i_terminal: Vec<C64>,
}

impl StatorSolution {
    pub fn active_power(&self, g: usize) -> f64 {
        self.vd[g] * self.id[g] + self.vq[g] * self.iq[g]
    }

    pub fn reactive_power(&self, g: usize) -> f64 {
        self.vq[g] * self.id[g] - self.vd[g] * self.iq[g]
    }
}

/// Solves the stator algebraic equations (zero armature resistance) together
/// with the reduced network `I = Y V` for the d/q currents of every machine.
pub(crate) fn solve_stator(machines: &[Internal], y: &DMatrix<C64>) -> Result<StatorSolution> {
    let n = machines.len();
    if y.nrows() != n || y.ncols() != n {
        return Err(invalid(format!("reduced network is {}x{}, expected {n}x{n}", y.nrows(), y.ncols())));
    }
    let j = C64::new(0.0, 1.0);
    let rot: Vec<C64> = machines
        .iter()
        .map(|m| C64::from_polar(1.0, m.delta - std::f64::consts::FRAC_PI_2))
        .collect();

    let mut a = DMatrix::zeros(2 * n, 2 * n);
    let mut rhs = DVector::zeros(2 * n);
    for i in 0..n {
        let mut b = C64::new(0.0, 0.0);
        for k in 0..n {
            let yr = y[(i, k)] * rot[k];
            let mk = &machines[k];
            let mut cd = j * mk.xd_prime * yr;
            let mut cq = -mk.xq_prime * yr;
            if i == k {
                cd += rot[i];
                cq += j * rot[i];
            }
            a[(2 * i, 2 * k)] = cd.re;
            a[(2 * i + 1, 2 * k)] = cd.im;
            a[(2 * i, 2 * k + 1)] = cq.re;
            a[(2 * i + 1, 2 * k + 1)] = cq.im;
            b += yr * C64::new(mk.ed, mk.eq);
        }
        rhs[2 * i] = b.re;
        rhs[2 * i + 1] = b.im;
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("stator/network interface equations".into()))?;

    let mut out = StatorSolution {
        id: vec![0.0; n],
        iq: vec![0.0; n],
        vd: vec![0.0; n],
        vq: vec![0.0; n],
        v_terminal: vec![C64::new(0.0, 0.0); n],
        i_terminal: vec![C64::new(0.0, 0.0); n],
    };
    for (k, m) in machines.iter().enumerate() {
        let id = sol[2 * k];
        let iq = sol[2 * k + 1];
        let vd = m.ed + m.xq_prime * iq;
        let vq = m.eq - m.xd_prime * id;
        out.id[k] = id;
        out.iq[k] = iq;
        out.vd[k] = vd;
        out.vq[k] = vq;
        out.v_terminal[k] = rot[k] * C64::new(vd, vq);
        out.i_terminal[k] = rot[k] * C64::new(id, iq);
    }
    Ok(out)
}
