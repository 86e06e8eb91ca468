use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::integrate::rk4_step;
use super::machine::{solve_stator, ChannelClass, GeneratorParams, Internal, MachineModel, StateKind, StatorSolution};
use super::network::{PowerFlowSolution, PowerNetwork, C64};
use super::trajectory::Trajectory;
use crate::error::{invalid, Error, Result};

/// Topology or load change applied to the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkChange {
    TripBranch { from: usize, to: usize },
    /// New constant-impedance load, converted at the pre-disturbance voltage.
    SetLoad { bus: usize, p: f64, q: f64 },
    ScaleLoad { bus: usize, factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "EventRepr", into = "EventRepr")]
pub struct NetworkEvent {
    pub time: f64,
    pub change: NetworkChange,
}

// Flat on-disk form. `flatten` would silently drop `deny_unknown_fields`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum EventRepr {
    TripBranch { time: f64, from: usize, to: usize },
    SetLoad { time: f64, bus: usize, p: f64, q: f64 },
    ScaleLoad { time: f64, bus: usize, factor: f64 },
}

impl From<EventRepr> for NetworkEvent {
    fn from(r: EventRepr) -> Self {
        let (time, change) = match r {
            EventRepr::TripBranch { time, from, to } => (time, NetworkChange::TripBranch { from, to }),
            EventRepr::SetLoad { time, bus, p, q } => (time, NetworkChange::SetLoad { bus, p, q }),
            EventRepr::ScaleLoad { time, bus, factor } => (time, NetworkChange::ScaleLoad { bus, factor }),
        };
        Self { time, change }
    }
}

impl From<NetworkEvent> for EventRepr {
    fn from(e: NetworkEvent) -> Self {
        let time = e.time;
        match e.change {
            NetworkChange::TripBranch { from, to } => EventRepr::TripBranch { time, from, to },
            NetworkChange::SetLoad { bus, p, q } => EventRepr::SetLoad { time, bus, p, q },
            NetworkChange::ScaleLoad { bus, factor } => EventRepr::ScaleLoad { time, bus, factor },
        }
    }
}

/// Everything needed to build a [`PowerSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub network: PowerNetwork,
    /// One entry per generator bus, in bus order.
    pub generators: Vec<GeneratorParams>,
    #[serde(default)]
    pub model: MachineModel,
    #[serde(default)]
    pub events: Vec<NetworkEvent>,
}

/// Reduced admittance matrices, each valid from its start time onward.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSchedule {
    segments: Vec<(f64, DMatrix<C64>)>,
}

impl NetworkSchedule {
    pub fn at(&self, t: f64) -> &DMatrix<C64> {
        let mut current = &self.segments[0].1;
        for (start, y) in &self.segments[1..] {
            if *start <= t + 1e-9 {
                current = y;
            } else {
                break;
            }
        }
        current
    }

    pub fn segments(&self) -> &[(f64, DMatrix<C64>)] {
        &self.segments
    }
}

/// Control references derived from the pre-disturbance equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub vref: f64,
    pub pref: f64,
    /// Transient EMFs and mechanical power at equilibrium; held constant by
    /// the classical model.
    pub ed: f64,
    pub eq: f64,
    pub pm: f64,
}

/// Multi-machine power system with generators on every PV/slack bus and the
/// network Kron-reduced to the generator terminals.
#[derive(Debug, Clone)]
pub struct PowerSystem {
    config: SystemConfig,
    schedule: NetworkSchedule,
    setpoints: Vec<Setpoint>,
    equilibrium: DVector<f64>,
    power_flow: PowerFlowSolution,
    omega_base: f64,
}

impl PowerSystem {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.network.validate()?;
        for g in &config.generators {
            g.validate()?;
        }
        let gen_buses = config.network.generator_buses();
        if gen_buses.len() != config.generators.len() {
            return Err(invalid(format!(
                "{} generator buses but {} generator parameter sets",
                gen_buses.len(),
                config.generators.len()
            )));
        }
        let pf = config.network.solve_power_flow(1e-12, 30)?;
        let loads = config.network.load_admittances(&pf.voltages);
        let base = config.network.reduced_admittance(&loads)?;

        let mut events = config.events.clone();
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut segments = vec![(f64::NEG_INFINITY, base)];
        let mut net = config.network.clone();
        let mut current_loads = loads;
        for ev in &events {
            if !(ev.time >= 0.0) {
                return Err(invalid(format!("event time must be non-negative, got {}", ev.time)));
            }
            match ev.change {
                NetworkChange::TripBranch { from, to } => net.trip_branch(from, to)?,
                NetworkChange::SetLoad { bus, p, q } => {
                    let i = net.bus_index(bus)?;
                    current_loads[i] = C64::new(p, -q) / pf.voltages[i].norm_sqr();
                }
                NetworkChange::ScaleLoad { bus, factor } => {
                    let i = net.bus_index(bus)?;
                    current_loads[i] *= factor;
                }
            }
            segments.push((ev.time, net.reduced_admittance(&current_loads)?));
        }

        let omega_base = 2.0 * PI * config.network.base_frequency;
        let mut sys = Self {
            schedule: NetworkSchedule { segments },
            setpoints: Vec::new(),
            equilibrium: DVector::zeros(0),
            power_flow: pf,
            omega_base,
            config,
        };
        sys.initialize_equilibrium(&gen_buses);
        Ok(sys)
    }

    fn initialize_equilibrium(&mut self, gen_buses: &[usize]) {
        let model = self.config.model;
        let per = model.states_per_machine();
        let mut x = DVector::zeros(per * gen_buses.len());
        let j = C64::new(0.0, 1.0);
        for (g, &bus) in gen_buses.iter().enumerate() {
            let p = &self.config.generators[g];
            let v = self.power_flow.voltages[bus];
            let s = self.power_flow.generation[bus];
            let i = (s / v).conj();
            let (delta, ed, eq, efd) = match model {
                MachineModel::TwoAxis => {
                    let delta = (v + j * p.xq * i).arg();
                    let to_dq = C64::from_polar(1.0, -(delta - FRAC_PI_2));
                    let vdq = v * to_dq;
                    let idq = i * to_dq;
                    let ed = vdq.re - p.xq_prime * idq.im;
                    let eq = vdq.im + p.xd_prime * idq.re;
                    (delta, ed, eq, eq + (p.xd - p.xd_prime) * idq.re)
                }
                MachineModel::Classical => {
                    let e = v + j * p.xd_prime * i;
                    (e.arg(), 0.0, e.norm(), 0.0)
                }
            };
            let base = g * per;
            x[base] = delta;
            if model == MachineModel::TwoAxis {
                x[base + 2] = eq;
                x[base + 3] = ed;
                x[base + 4] = efd;
                x[base + 5] = s.re;
            }
            self.setpoints.push(Setpoint {
                vref: v.norm() + efd / p.ka,
                pref: s.re,
                ed,
                eq,
                pm: s.re,
            });
        }
        self.equilibrium = x;
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn schedule(&self) -> &NetworkSchedule {
        &self.schedule
    }

    pub fn model(&self) -> MachineModel {
        self.config.model
    }

    pub fn n_generators(&self) -> usize {
        self.config.generators.len()
    }

    pub fn state_dim(&self) -> usize {
        self.n_generators() * self.model().states_per_machine()
    }

    pub fn measurement_dim(&self) -> usize {
        self.n_generators() * ChannelClass::ALL.len()
    }

    pub fn equilibrium(&self) -> &DVector<f64> {
        &self.equilibrium
    }

    pub fn power_flow(&self) -> &PowerFlowSolution {
        &self.power_flow
    }

    pub fn setpoints(&self) -> &[Setpoint] {
        &self.setpoints
    }

    pub fn omega_base(&self) -> f64 {
        self.omega_base
    }

    pub fn state_index(&self, gen: usize, kind: StateKind) -> Option<usize> {
        let kinds = StateKind::kinds(self.model());
        let pos = kinds.iter().position(|&k| k == kind)?;
        (gen < self.n_generators()).then(|| gen * kinds.len() + pos)
    }

    /// `(generator, kind)` of every state-vector entry.
    pub fn state_layout(&self) -> Vec<(usize, StateKind)> {
        let kinds = StateKind::kinds(self.model());
        (0..self.n_generators()).flat_map(|g| kinds.iter().map(move |&k| (g, k))).collect()
    }

    pub fn measurement_index(&self, gen: usize, class: ChannelClass) -> usize {
        gen * ChannelClass::ALL.len() + class.offset()
    }

    pub fn measurement_layout(&self) -> Vec<(usize, ChannelClass)> {
        (0..self.n_generators())
            .flat_map(|g| ChannelClass::ALL.iter().map(move |&c| (g, c)))
            .collect()
    }

    pub fn state_labels(&self) -> Vec<String> {
        self.state_layout().iter().map(|(g, k)| format!("{}_{}", k.label(), g + 1)).collect()
    }

    pub fn measurement_labels(&self) -> Vec<String> {
        self.measurement_layout().iter().map(|(g, c)| format!("{}_{}", c.label(), g + 1)).collect()
    }

    fn internals(&self, x: &DVector<f64>) -> Result<Vec<Internal>> {
        if x.len() != self.state_dim() {
            return Err(invalid(format!("state has {} entries, expected {}", x.len(), self.state_dim())));
        }
        let per = self.model().states_per_machine();
        Ok(self
            .config
            .generators
            .iter()
            .enumerate()
            .map(|(g, p)| match self.model() {
                MachineModel::TwoAxis => Internal {
                    delta: x[g * per],
                    eq: x[g * per + 2],
                    ed: x[g * per + 3],
                    xd_prime: p.xd_prime,
                    xq_prime: p.xq_prime,
                },
                MachineModel::Classical => Internal {
                    delta: x[g * per],
                    eq: self.setpoints[g].eq,
                    ed: self.setpoints[g].ed,
                    xd_prime: p.xd_prime,
                    xq_prime: p.xd_prime,
                },
            })
            .collect())
    }

    pub fn stator(&self, x: &DVector<f64>, y: &DMatrix<C64>) -> Result<StatorSolution> {
        solve_stator(&self.internals(x)?, y)
    }

    /// Right-hand side of the machine differential equations for a fixed
    /// reduced network.
    pub fn derivatives(&self, x: &DVector<f64>, y: &DMatrix<C64>) -> Result<DVector<f64>> {
        let st = self.stator(x, y)?;
        let per = self.model().states_per_machine();
        let mut dx = DVector::zeros(x.len());
        for (g, p) in self.config.generators.iter().enumerate() {
            let b = g * per;
            let dw = x[b + 1];
            let pe = st.active_power(g);
            dx[b] = self.omega_base * dw;
            match self.model() {
                MachineModel::TwoAxis => {
                    let (eq, ed, efd, pm) = (x[b + 2], x[b + 3], x[b + 4], x[b + 5]);
                    let sp = &self.setpoints[g];
                    let vt = st.v_terminal[g].norm();
                    dx[b + 1] = (pm - pe - p.d * dw) / (2.0 * p.h);
                    dx[b + 2] = (-eq - (p.xd - p.xd_prime) * st.id[g] + efd) / p.td0_prime;
                    dx[b + 3] = (-ed + (p.xq - p.xq_prime) * st.iq[g]) / p.tq0_prime;
                    dx[b + 4] = (-efd + p.ka * (sp.vref - vt)) / p.ta;
                    dx[b + 5] = (-pm + sp.pref - dw / p.droop) / p.tg;
                }
                MachineModel::Classical => {
                    dx[b + 1] = (self.setpoints[g].pm - pe - p.d * dw) / (2.0 * p.h);
                }
            }
        }
        Ok(dx)
    }

    pub fn derivatives_at(&self, x: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        self.derivatives(x, self.schedule.at(t))
    }

    /// Terminal voltage magnitude and angle, active and reactive power of
    /// every generator. Angles are unwrapped relative to the rotor angle.
    pub fn measure(&self, x: &DVector<f64>, y: &DMatrix<C64>) -> Result<DVector<f64>> {
        let st = self.stator(x, y)?;
        let per = self.model().states_per_machine();
        let mut z = DVector::zeros(self.measurement_dim());
        for g in 0..self.n_generators() {
            let b = g * ChannelClass::ALL.len();
            z[b] = st.vd[g].hypot(st.vq[g]);
            z[b + 1] = x[g * per] - FRAC_PI_2 + st.vq[g].atan2(st.vd[g]);
            z[b + 2] = st.active_power(g);
            z[b + 3] = st.reactive_power(g);
        }
        Ok(z)
    }

    pub fn measure_at(&self, x: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        self.measure(x, self.schedule.at(t))
    }

    pub fn step_rk4(&self, x: &DVector<f64>, dt: f64, y: &DMatrix<C64>) -> Result<DVector<f64>> {
        rk4_step(x, dt, |s| self.derivatives(s, y))
    }

    /// Integrates from `t0` over `duration` with equal RK4 substeps no longer
    /// than `max_step`, holding the network active at `t0`.
    pub fn propagate(&self, x: &DVector<f64>, t0: f64, duration: f64, max_step: f64) -> Result<DVector<f64>> {
        if !(duration > 0.0 && max_step > 0.0) {
            return Err(invalid("propagation needs positive duration and step"));
        }
        let y = self.schedule.at(t0);
        let n = (duration / max_step - 1e-9).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        let mut s = x.clone();
        for _ in 0..n {
            s = self.step_rk4(&s, h, y)?;
        }
        Ok(s)
    }

    /// Ground-truth run from the equilibrium, recording states and clean
    /// measurements every `dt_sample` seconds. Fails when any speed
    /// deviation exceeds `speed_limit` per unit.
    pub fn simulate_truth(&self, horizon: f64, dt_sample: f64, dt_internal: f64, speed_limit: f64) -> Result<Trajectory> {
        if !(horizon > 0.0 && dt_sample > 0.0 && dt_internal > 0.0 && dt_internal <= dt_sample) {
            return Err(invalid("invalid simulation timing"));
        }
        let samples = (horizon / dt_sample + 1e-9).floor() as usize + 1;
        let mut traj = Trajectory::new(self.state_labels(), self.measurement_labels());
        let mut x = self.equilibrium.clone();
        let per = self.model().states_per_machine();
        for k in 0..samples {
            let t = k as f64 * dt_sample;
            if k > 0 {
                let prev = (k - 1) as f64 * dt_sample;
                x = self.propagate(&x, prev, dt_sample, dt_internal).map_err(|e| Error::Simulation {
                    step: k,
                    time: t,
                    message: e.to_string(),
                })?;
                if let Some(g) = (0..self.n_generators()).find(|&g| !(x[g * per + 1].abs() <= speed_limit)) {
                    return Err(Error::Simulation {
                        step: k,
                        time: t,
                        message: format!("generator {} speed deviation {:.4} pu exceeds {speed_limit}", g + 1, x[g * per + 1]),
                    });
                }
            }
            let z = self.measure_at(&x, t).map_err(|e| Error::Simulation { step: k, time: t, message: e.to_string() })?;
            traj.push(t, x.clone(), z);
        }
        Ok(traj)
    }
}
