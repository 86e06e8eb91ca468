use super::scenario::{ChannelNoise, Injection, InjectionKind, LoadScale, RowAttack, ScenarioSpec, SystemSpec};
use crate::dynamics::{wscc, ChannelClass, MachineModel};
use crate::error::{invalid, Result};

/// Names accepted by [`builtin_case`].
pub const BUILTIN_CASES: [&str; 7] = ["case1", "case2", "case3", "case4", "case5", "stressed", "breakdown"];

/// Generator (1-based) targeted by the injection cases.
pub const TARGET_GENERATOR: usize = 2;

/// Load multiplier at bus 5 for the stressed case.
pub const STRESSED_LOAD_FACTOR: f64 = 2.0;

fn wscc9(load_scale: Vec<LoadScale>) -> SystemSpec {
    SystemSpec::Wscc9 { power_scale: 1.0, model: MachineModel::TwoAxis, load_scale, events: vec![wscc::line_trip(0.5)] }
}

/// The built-in experiment library.
pub fn builtin_case(name: &str) -> Result<ScenarioSpec> {
    let base = ScenarioSpec { name: name.to_string(), system: wscc9(Vec::new()), ..ScenarioSpec::default() };
    let g = vec![TARGET_GENERATOR];
    let spec = match name {
        "case1" => base,
        "case2" => ScenarioSpec {
            injections: vec![Injection::window(InjectionKind::ObservationOutlier, g, 4.0, 6.0, 0.2)
                .with_channels(vec![ChannelClass::ActivePower, ChannelClass::ReactivePower])],
            ..base
        },
        "case3" => ScenarioSpec {
            injections: vec![Injection::window(InjectionKind::InnovationOutlier, g, 4.0, 6.0, 0.2)],
            ..base
        },
        "case4" => ScenarioSpec {
            injections: vec![Injection::window(InjectionKind::MeasurementLoss, g, 5.0, 8.0, 0.0)],
            ..base
        },
        "case5" => ScenarioSpec { noise: ChannelNoise::cauchy_case(0.005), ..base },
        "stressed" => ScenarioSpec {
            system: wscc9(vec![LoadScale { bus: 5, factor: STRESSED_LOAD_FACTOR }]),
            ..base
        },
        "breakdown" => ScenarioSpec {
            row_attack: Some(RowAttack { fraction: 0.25, magnitude: 20.0, start: 1.0, end: 10.0, measurements_only: false }),
            ..base
        },
        other => {
            return Err(invalid(format!("unknown case '{other}', expected one of {}", BUILTIN_CASES.join(", "))));
        }
    };
    Ok(spec)
}
