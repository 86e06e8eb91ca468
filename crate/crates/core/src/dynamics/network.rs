//! Bus/branch network model, Newton-Raphson power flow and Kron reduction
//! to generator terminal nodes.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

/// Bus data in per unit on the system base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    /// Voltage setpoint (slack and PV buses).
    #[serde(default = "one")]
    pub v_set: f64,
    /// Scheduled active generation (PV buses).
    #[serde(default)]
    pub p_gen: f64,
    #[serde(default)]
    pub p_load: f64,
    #[serde(default)]
    pub q_load: f64,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Pi-model branch; `b` is the total line charging susceptance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "yes")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerNetwork {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub base_frequency: f64,
}

/// Converged power flow.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    /// Complex bus voltages, indexed like `PowerNetwork::buses`.
    pub voltages: Vec<C64>,
    /// Complex generation `P + jQ` at every bus (zero at pure load buses).
    pub generation: Vec<C64>,
    pub iterations: usize,
}

impl PowerNetwork {
    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return Err(invalid("network has no buses"));
        }
        if self.buses.iter().filter(|b| b.kind == BusKind::Slack).count() != 1 {
            return Err(invalid("network needs exactly one slack bus"));
        }
        if !(self.base_frequency > 0.0) {
            return Err(invalid("base frequency must be positive"));
        }
        for br in &self.branches {
            self.bus_index(br.from)?;
            self.bus_index(br.to)?;
            if br.r == 0.0 && br.x == 0.0 {
                return Err(invalid(format!("branch {}-{} has zero impedance", br.from, br.to)));
            }
        }
        Ok(())
    }

    pub fn bus_index(&self, id: usize) -> Result<usize> {
        self.buses
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| invalid(format!("unknown bus id {id}")))
    }

    /// Buses carrying a generator, in bus order.
    pub fn generator_buses(&self) -> Vec<usize> {
        self.buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind != BusKind::Pq)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn admittance_matrix(&self) -> Result<DMatrix<C64>> {
        let n = self.buses.len();
        let mut y = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for br in self.branches.iter().filter(|b| b.in_service) {
            let f = self.bus_index(br.from)?;
            let t = self.bus_index(br.to)?;
            let ys = C64::new(1.0, 0.0) / C64::new(br.r, br.x);
            let half = C64::new(0.0, 0.5 * br.b);
            y[(f, f)] += ys + half;
            y[(t, t)] += ys + half;
            y[(f, t)] -= ys;
            y[(t, f)] -= ys;
        }
        Ok(y)
    }

    /// Trips the first in-service branch between the two buses.
    pub fn trip_branch(&mut self, a: usize, b: usize) -> Result<()> {
        let br = self
            .branches
            .iter_mut()
            .find(|br| br.in_service && ((br.from == a && br.to == b) || (br.from == b && br.to == a)))
            .ok_or_else(|| invalid(format!("no in-service branch between buses {a} and {b}")))?;
        br.in_service = false;
        Ok(())
    }

    /// Newton-Raphson power flow in polar coordinates.
    pub fn solve_power_flow(&self, tol: f64, max_iter: usize) -> Result<PowerFlowSolution> {
        self.validate()?;
        let ybus = self.admittance_matrix()?;
        let n = self.buses.len();
        let mut vm: Vec<f64> =
            self.buses.iter().map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.v_set }).collect();
        let mut va = vec![0.0; n];

        // Unknowns: angles of non-slack buses, magnitudes of PQ buses.
        let ang_idx: Vec<usize> = (0..n).filter(|&i| self.buses[i].kind != BusKind::Slack).collect();
        let mag_idx: Vec<usize> = (0..n).filter(|&i| self.buses[i].kind == BusKind::Pq).collect();
        let nu = ang_idx.len() + mag_idx.len();

        let p_spec: Vec<f64> = self.buses.iter().map(|b| b.p_gen - b.p_load).collect();
        let q_spec: Vec<f64> = self.buses.iter().map(|b| -b.q_load).collect();

        let mismatch = |vm: &[f64], va: &[f64]| -> DVector<f64> {
            let v: Vec<C64> = (0..n).map(|i| C64::from_polar(vm[i], va[i])).collect();
            let s: Vec<C64> = (0..n)
                .map(|i| {
                    let inj: C64 = (0..n).map(|k| ybus[(i, k)] * v[k]).sum();
                    v[i] * inj.conj()
                })
                .collect();
            let mut f = DVector::zeros(nu);
            for (r, &i) in ang_idx.iter().enumerate() {
                f[r] = s[i].re - p_spec[i];
            }
            for (r, &i) in mag_idx.iter().enumerate() {
                f[ang_idx.len() + r] = s[i].im - q_spec[i];
            }
            f
        };

        let mut iterations = 0;
        loop {
            let f = mismatch(&vm, &va);
            let err = f.amax();
            if err < tol {
                break;
            }
            if iterations >= max_iter || !err.is_finite() {
                return Err(Error::PowerFlow { iterations, mismatch: err });
            }
            // Central-difference Jacobian; the system is small.
            let h = 1e-7;
            let mut jac = DMatrix::zeros(nu, nu);
            for c in 0..nu {
                let (mut vp, mut ap) = (vm.clone(), va.clone());
                let (mut vn, mut an) = (vm.clone(), va.clone());
                if c < ang_idx.len() {
                    ap[ang_idx[c]] += h;
                    an[ang_idx[c]] -= h;
                } else {
                    vp[mag_idx[c - ang_idx.len()]] += h;
                    vn[mag_idx[c - ang_idx.len()]] -= h;
                }
                let col = (mismatch(&vp, &ap) - mismatch(&vn, &an)) / (2.0 * h);
                jac.set_column(c, &col);
            }
            let dx = jac
                .lu()
                .solve(&(-f))
                .ok_or_else(|| Error::Singular("power flow Jacobian".into()))?;
            for (r, &i) in ang_idx.iter().enumerate() {
                va[i] += dx[r];
            }
            for (r, &i) in mag_idx.iter().enumerate() {
                vm[i] += dx[ang_idx.len() + r];
            }
            iterations += 1;
        }

        let voltages: Vec<C64> = (0..n).map(|i| C64::from_polar(vm[i], va[i])).collect();
        let generation = (0..n)
            .map(|i| {
                let inj: C64 = (0..n).map(|k| ybus[(i, k)] * voltages[k]).sum();
                let s = voltages[i] * inj.conj();
                let b = &self.buses[i];
                if b.kind == BusKind::Pq {
                    C64::new(0.0, 0.0)
                } else {
                    s + C64::new(b.p_load, b.q_load)
                }
            })
            .collect();
        Ok(PowerFlowSolution { voltages, generation, iterations })
    }

    /// Constant-impedance load admittances `(P - jQ) / |V|^2` at the given
    /// voltages.
    pub fn load_admittances(&self, voltages: &[C64]) -> Vec<C64> {
        self.buses
            .iter()
            .zip(voltages)
            .map(|(b, v)| C64::new(b.p_load, -b.q_load) / v.norm_sqr())
            .collect()
    }

    /// Kron-reduced admittance among the generator buses, with loads
    /// represented by the fixed admittances `loads`.
    pub fn reduced_admittance(&self, loads: &[C64]) -> Result<DMatrix<C64>> {
        let mut y = self.admittance_matrix()?;
        for (i, yl) in loads.iter().enumerate() {
            y[(i, i)] += *yl;
        }
        kron_reduce(&y, &self.generator_buses())
    }
}

/// Eliminates every node not listed in `keep`.
pub fn kron_reduce(y: &DMatrix<C64>, keep: &[usize]) -> Result<DMatrix<C64>> {
    let n = y.nrows();
    let drop: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| y[(rows[i], cols[j])])
    };
    let ykk = pick(keep, keep);
    if drop.is_empty() {
        return Ok(ykk);
    }
    let ykd = pick(keep, &drop);
    let ydk = pick(&drop, keep);
    let ydd = pick(&drop, &drop);
    let x = ydd
        .lu()
        .solve(&ydk)
        .ok_or_else(|| Error::Singular("Kron reduction: eliminated block is singular".into()))?;
    Ok(ykk - ykd * x)
}
