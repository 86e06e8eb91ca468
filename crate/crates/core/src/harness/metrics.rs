use nalgebra::DVector;

use crate::dynamics::StateKind;
use crate::error::{invalid, Result};

/// Per-state mean absolute error between two equally long series.
pub fn mae(estimates: &[DVector<f64>], truth: &[DVector<f64>]) -> Result<DVector<f64>> {
    if estimates.len() != truth.len() {
        return Err(invalid(format!("mae: {} estimates for {} truth samples", estimates.len(), truth.len())));
    }
    let Some(first) = truth.first() else {
        return Err(invalid("mae: empty series"));
    };
    let mut acc = DVector::zeros(first.len());
    for (e, x) in estimates.iter().zip(truth) {
        if e.len() != x.len() || x.len() != acc.len() {
            return Err(invalid("mae: state dimension mismatch"));
        }
        acc += (e - x).abs();
    }
    Ok(acc / truth.len() as f64)
}

/// Mean of the per-state errors over every state of one kind.
pub fn class_mae(mae: &DVector<f64>, layout: &[(usize, StateKind)], kind: StateKind) -> f64 {
    mean(layout.iter().zip(mae.iter()).filter(|((_, k), _)| *k == kind).map(|(_, &v)| v))
}

/// Mean per-state error over one generator's states (0-based index).
pub fn generator_mae(mae: &DVector<f64>, layout: &[(usize, StateKind)], gen: usize) -> f64 {
    mean(layout.iter().zip(mae.iter()).filter(|((g, _), _)| *g == gen).map(|(_, &v)| v))
}

/// Mean over `indices` (all states when empty) of `mae_j / reference_j`:
/// how many times worse a run is than a reference run, state by state.
pub fn mae_ratio(mae: &DVector<f64>, reference: &DVector<f64>, indices: &[usize]) -> Result<f64> {
    if mae.len() != reference.len() {
        return Err(invalid("mae_ratio: dimension mismatch"));
    }
    let all: Vec<usize>;
    let idx = if indices.is_empty() {
        all = (0..mae.len()).collect();
        &all
    } else {
        indices
    };
    if let Some(&j) = idx.iter().find(|&&j| j >= mae.len()) {
        return Err(invalid(format!("mae_ratio: state {j} out of range")));
    }
    Ok(mean(idx.iter().map(|&j| mae[j] / reference[j].max(f64::MIN_POSITIVE))))
}

/// Indices of the states of one generator (0-based).
pub fn generator_states(layout: &[(usize, StateKind)], gen: usize) -> Vec<usize> {
    layout.iter().enumerate().filter(|(_, (g, _))| *g == gen).map(|(i, _)| i).collect()
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}
