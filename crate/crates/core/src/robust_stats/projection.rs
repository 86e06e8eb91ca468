use super::location::{coordinatewise_median, mad, median};
use super::{HuberConfig, PointCloud};
use crate::error::{invalid, Result};

/// Weight assigned to a point whose projection statistic is infinite.
pub const MIN_WEIGHT: f64 = 1e-8;

/// Quantile of the chi-squared distribution with two degrees of freedom,
/// available in closed form as `-2 ln(1 - p)`.
pub fn chi2_2_quantile(p: f64) -> f64 {
    -2.0 * (1.0 - p).ln()
}

/// Projection statistics of every point with the derived outlier flags and
/// GM downweighting factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PsResult {
    pub ps: Vec<f64>,
    /// `ps[i]^2` exceeds the 97.5% chi-squared(2) quantile.
    pub flags: Vec<bool>,
    /// `min(1, d^2 / ps[i]^2)`.
    pub weights: Vec<f64>,
    /// Set when some projection direction had zero MAD, or when every point
    /// coincides with the coordinatewise median.
    pub degenerate: bool,
    pub threshold: f64,
}

impl PsResult {
    /// Result for a cloud that carries no outlyingness information.
    pub fn uninformative(m: usize) -> Self {
        Self {
            ps: vec![0.0; m],
            flags: vec![false; m],
            weights: vec![1.0; m],
            degenerate: true,
            threshold: chi2_2_quantile(0.975),
        }
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Projection statistics over all directions through the coordinatewise
/// median and the data points.
///
/// A direction whose MAD is zero is handled as follows: when at least
/// `ceil(m/2) + 1` points project exactly onto the median, points off the
/// median get an infinite standardized projection along it; otherwise the
/// direction is skipped.
pub fn projection_statistics(cloud: &PointCloud, config: &HuberConfig) -> Result<PsResult> {
    let m = cloud.len();
    let n = cloud.dim();
    if m < 2 {
        return Err(invalid("projection statistics need at least two points"));
    }
    if m <= n {
        return Err(invalid(format!(
            "projection statistics need more points than dimensions (m = {m}, n = {n})"
        )));
    }
    let pts = cloud.points();
    let center = coordinatewise_median(cloud)?;
    let threshold = chi2_2_quantile(0.975);

    let mut ps = vec![0.0_f64; m];
    let mut degenerate = false;
    let mut any_direction = false;
    let mut zeta = vec![0.0; m];
    let majority = m.div_ceil(2) + 1;

    for j in 0..m {
        let u = pts.row(j).transpose() - &center;
        let norm = u.norm();
        if norm == 0.0 {
            continue;
        }
        let dir = u / norm;
        for (i, z) in zeta.iter_mut().enumerate() {
            *z = pts.row(i).dot(&dir.transpose());
        }
        let med = median(&zeta);
        let scale = mad(&zeta, n)?;
        any_direction = true;
        if scale.degenerate {
            degenerate = true;
            let tie_tol = 1e-12 * (1.0 + med.abs());
            let at_median = zeta.iter().filter(|z| (*z - med).abs() <= tie_tol).count();
            if at_median >= majority {
                for (p, z) in ps.iter_mut().zip(&zeta) {
                    if (z - med).abs() > tie_tol {
                        *p = f64::INFINITY;
                    }
                }
            }
            continue;
        }
        for (p, z) in ps.iter_mut().zip(&zeta) {
            let standardized = (z - med).abs() / scale.value;
            if standardized > *p {
                *p = standardized;
            }
        }
    }
    if !any_direction {
        return Ok(PsResult::uninformative(m));
    }

    let d2 = config.d * config.d;
    let weights = ps
        .iter()
        .map(|&p| {
            if p.is_infinite() {
                MIN_WEIGHT
            } else if p * p <= d2 {
                1.0
            } else {
                (d2 / (p * p)).max(MIN_WEIGHT)
            }
        })
        .collect();
    let flags = ps.iter().map(|&p| p * p > threshold).collect();
    Ok(PsResult { ps, flags, weights, degenerate, threshold })
}
