use nalgebra::DVector;

use super::PointCloud;
use crate::error::{invalid, Result};

/// Consistency factor of the MAD at the Gaussian distribution.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// Sample median; even-length samples use the midpoint of the two central
/// order statistics. Returns NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

pub fn coordinatewise_median(cloud: &PointCloud) -> Result<DVector<f64>> {
    if cloud.is_empty() {
        return Err(invalid("coordinatewise median of an empty cloud"));
    }
    let pts = cloud.points();
    let mut column = Vec::with_capacity(pts.nrows());
    Ok(DVector::from_fn(pts.ncols(), |j, _| {
        column.clear();
        column.extend(pts.column(j).iter().copied());
        median(&column)
    }))
}

/// Scale estimate returned by [`mad`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mad {
    pub value: f64,
    /// Set when the median absolute deviation is exactly zero.
    pub degenerate: bool,
}

/// Small-sample corrected MAD, `1.4826 * (1 + 15/(m - n)) * med|v - med(v)|`,
/// where `n` is the dimension of the space the values were projected from.
pub fn mad(values: &[f64], n: usize) -> Result<Mad> {
    let m = values.len();
    if m <= n {
        return Err(invalid(format!(
            "MAD correction needs more values than dimensions (m = {m}, n = {n})"
        )));
    }
    let med = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let raw = median(&dev);
    let correction = 1.0 + 15.0 / (m - n) as f64;
    Ok(Mad { value: MAD_CONSISTENCY * correction * raw, degenerate: raw == 0.0 })
}
