use std::io::{self, Write};

use nalgebra::DVector;

/// Sampled states and clean measurements of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub clean_measurements: Vec<DVector<f64>>,
    pub state_labels: Vec<String>,
    pub measurement_labels: Vec<String>,
}

impl Trajectory {
    pub fn new(state_labels: Vec<String>, measurement_labels: Vec<String>) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            clean_measurements: Vec::new(),
            state_labels,
            measurement_labels,
        }
    }

    pub fn push(&mut self, t: f64, x: DVector<f64>, z: DVector<f64>) {
        self.times.push(t);
        self.states.push(x);
        self.clean_measurements.push(z);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// One row per sample: `time, states..., measurements...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "time")?;
        for l in self.state_labels.iter().chain(&self.measurement_labels) {
            write!(out, ",{l}")?;
        }
        writeln!(out)?;
        for k in 0..self.len() {
            write!(out, "{}", self.times[k])?;
            for v in self.states[k].iter().chain(self.clean_measurements[k].iter()) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
