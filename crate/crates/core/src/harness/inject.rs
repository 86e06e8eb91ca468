use nalgebra::DVector;

use super::scenario::{ChannelNoise, Injection, InjectionKind, OutlierMode};
use crate::dynamics::{ChannelClass, StateKind};
use crate::error::{invalid, Result};
use crate::filters::StepPerturbation;
use crate::noise::RngStream;

/// Point of the measurement pipeline where an injection acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// On the true values, before noise is added.
    Clean,
    /// On the noisy values received by the estimator.
    Received,
    /// Inside the filters, on the predicted state.
    Filter,
}

impl InjectionKind {
    pub fn stage(self) -> Stage {
        match self {
            InjectionKind::ObservationOutlier => Stage::Clean,
            InjectionKind::InnovationOutlier => Stage::Filter,
            InjectionKind::MeasurementLoss | InjectionKind::ReplayAttack | InjectionKind::BiasInjection => {
                Stage::Received
            }
        }
    }
}

fn targeted(injection: &Injection, layout: &[(usize, ChannelClass)]) -> Vec<usize> {
    let channels = injection.target_channels();
    layout
        .iter()
        .enumerate()
        .filter(|(_, (g, c))| injection.generators.contains(&(g + 1)) && channels.contains(c))
        .map(|(i, _)| i)
        .collect()
}

/// Applies a measurement injection in place. `layout` maps every
/// measurement index to its (0-based generator, channel); `rng` supplies
/// the noise that replaces lost channels. Innovation outliers leave the
/// measurements untouched (see [`perturbation_schedule`]).
pub fn inject(
    measurements: &mut [DVector<f64>],
    times: &[f64],
    layout: &[(usize, ChannelClass)],
    injection: &Injection,
    noise: &ChannelNoise,
    rng: &mut RngStream,
) -> Result<()> {
    if measurements.len() != times.len() {
        return Err(invalid("measurement and time series differ in length"));
    }
    if let Some(z) = measurements.iter().find(|z| z.len() != layout.len()) {
        return Err(invalid(format!("measurement vector has {} entries, layout {}", z.len(), layout.len())));
    }
    let horizon = times.last().copied().unwrap_or(0.0);
    let n_gen = layout.iter().map(|(g, _)| g + 1).max().unwrap_or(0);
    injection.validate(horizon, n_gen)?;
    let rows = targeted(injection, layout);
    let m = injection.magnitude;
    match injection.kind {
        InjectionKind::InnovationOutlier => {}
        InjectionKind::ObservationOutlier | InjectionKind::BiasInjection => {
            let additive = injection.kind == InjectionKind::BiasInjection || injection.mode == OutlierMode::Additive;
            for (z, &t) in measurements.iter_mut().zip(times) {
                if injection.active(t) {
                    for &i in &rows {
                        if additive {
                            z[i] += m;
                        } else {
                            z[i] *= 1.0 + m;
                        }
                    }
                }
            }
        }
        InjectionKind::MeasurementLoss => {
            for (z, &t) in measurements.iter_mut().zip(times) {
                if injection.active(t) {
                    for &i in &rows {
                        z[i] = noise.get(layout[i].1).sample(rng);
                    }
                }
            }
        }
        InjectionKind::ReplayAttack => {
            let lag = injection.replay_lag.unwrap_or(injection.end - injection.start);
            let dt = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
            let shift = (lag / dt).round() as usize;
            let original: Vec<DVector<f64>> = measurements.to_vec();
            for (k, &t) in times.iter().enumerate() {
                if injection.active(t) && k >= shift {
                    for &i in &rows {
                        measurements[k][i] = original[k - shift][i];
                    }
                }
            }
        }
    }
    Ok(())
}

/// Per-sample predicted-state corruptions from the innovation outliers.
pub fn perturbation_schedule(
    times: &[f64],
    state_layout: &[(usize, StateKind)],
    injections: &[Injection],
) -> Vec<Option<StepPerturbation>> {
    times
        .iter()
        .map(|&t| {
            let mut p = StepPerturbation::default();
            for inj in injections.iter().filter(|i| i.kind == InjectionKind::InnovationOutlier && i.active(t)) {
                let states = inj.target_states();
                for (j, (g, kind)) in state_layout.iter().enumerate() {
                    if inj.generators.contains(&(g + 1)) && states.contains(kind) {
                        p.scale.push((j, 1.0 + inj.magnitude));
                    }
                }
            }
            (!p.is_empty()).then_some(p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> Vec<(usize, ChannelClass)> {
        (0..2).flat_map(|g| ChannelClass::ALL.iter().map(move |&c| (g, c))).collect()
    }

    fn series() -> (Vec<f64>, Vec<DVector<f64>>) {
        let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.2).collect();
        let z = times.iter().map(|&t| DVector::from_fn(8, |i, _| 1.0 + i as f64 + t)).collect();
        (times, z)
    }

    #[test]
    fn zero_magnitude_outlier_is_identity() {
        let (t, z) = series();
        let mut c = z.clone();
        let inj = Injection::window(InjectionKind::ObservationOutlier, vec![1, 2], 1.0, 5.0, 0.0);
        inject(&mut c, &t, &layout(), &inj, &ChannelNoise::default(), &mut RngStream::new(1)).unwrap();
        assert_eq!(c, z);
    }

    #[test]
    fn outlier_scales_targeted_channels_only_in_window() {
        let (t, z) = series();
        let mut c = z.clone();
        let inj = Injection::window(InjectionKind::ObservationOutlier, vec![2], 4.0, 6.0, 0.2)
            .with_channels(vec![ChannelClass::ActivePower, ChannelClass::ReactivePower]);
        inject(&mut c, &t, &layout(), &inj, &ChannelNoise::default(), &mut RngStream::new(1)).unwrap();
        for k in 0..t.len() {
            for i in 0..8 {
                let hit = (4.0..=6.0).contains(&t[k]) && (i == 6 || i == 7);
                let want = if hit { z[k][i] * 1.2 } else { z[k][i] };
                assert!((c[k][i] - want).abs() < 1e-12, "k={k} i={i}");
            }
        }
    }

    #[test]
    fn replay_copies_earlier_window() {
        let (t, z) = series();
        let mut c = z.clone();
        let inj = Injection::window(InjectionKind::ReplayAttack, vec![1], 6.0, 8.0, 0.0);
        inject(&mut c, &t, &layout(), &inj, &ChannelNoise::default(), &mut RngStream::new(1)).unwrap();
        assert_eq!(c[35][0], z[25][0]);
        assert_eq!(c[35][4], z[35][4]);
        assert_eq!(c[20], z[20]);
    }

    #[test]
    fn window_outside_horizon_rejected() {
        let (t, mut z) = series();
        let inj = Injection::window(InjectionKind::BiasInjection, vec![1], 9.0, 12.0, 1.0);
        assert!(inject(&mut z, &t, &layout(), &inj, &ChannelNoise::default(), &mut RngStream::new(1)).is_err());
    }

    #[test]
    fn innovation_outlier_schedules_scaling() {
        let times = [0.0, 4.0, 5.0, 7.0];
        let state_layout: Vec<(usize, StateKind)> =
            (0..2).flat_map(|g| StateKind::ALL.iter().map(move |&k| (g, k))).collect();
        let inj = Injection::window(InjectionKind::InnovationOutlier, vec![2], 4.0, 6.0, 0.2);
        let p = perturbation_schedule(&times, &state_layout, &[inj]);
        assert!(p[0].is_none() && p[3].is_none());
        assert_eq!(p[1].as_ref().unwrap().scale, vec![(6, 1.2)]);
    }
}
