//! WSCC 3-machine 9-bus test system (Anderson and Fouad data, 100 MVA base).

use super::machine::{GeneratorParams, MachineModel};
use super::network::{Branch, Bus, BusKind, PowerNetwork};
use super::system::{NetworkChange, NetworkEvent, SystemConfig};

const BRANCHES: [(usize, usize, f64, f64, f64); 9] = [
    (1, 4, 0.0, 0.0576, 0.0),
    (4, 5, 0.010, 0.085, 0.176),
    (4, 6, 0.017, 0.092, 0.158),
    (5, 7, 0.032, 0.161, 0.306),
    (6, 9, 0.039, 0.170, 0.358),
    (7, 8, 0.0085, 0.072, 0.149),
    (8, 9, 0.0119, 0.1008, 0.209),
    (2, 7, 0.0, 0.0625, 0.0),
    (3, 9, 0.0, 0.0586, 0.0),
];

/// Generator ratings in MVA, used to express the 5% governor droop on the
/// system base.
const RATINGS: [f64; 3] = [247.5, 192.0, 128.0];

fn machines() -> Vec<GeneratorParams> {
    let raw = [
        // h, d, xd, xq, xd', xq', td0', tq0'
        (23.64, 10.0, 0.146, 0.0969, 0.0608, 0.0969, 8.96, 0.31),
        (6.40, 2.5, 0.8958, 0.8645, 0.1198, 0.1969, 6.00, 0.535),
        (3.01, 1.2, 1.3125, 1.2578, 0.1813, 0.25, 5.89, 0.60),
    ];
    raw.iter()
        .zip(RATINGS)
        .map(|(&(h, d, xd, xq, xdp, xqp, td0, tq0), rating)| GeneratorParams {
            h,
            d,
            xd,
            xq,
            xd_prime: xdp,
            xq_prime: xqp,
            td0_prime: td0,
            tq0_prime: tq0,
            ka: 20.0,
            ta: 0.2,
            droop: 0.05 * 100.0 / rating,
            tg: 0.5,
        })
        .collect()
}

/// The 9-bus network with every power and admittance quantity expressed on
/// a base `power_scale` times smaller than 100 MVA. Dynamics in per unit are
/// unchanged by the rebasing; only the per-unit magnitudes of powers,
/// impedances and inertias scale.
pub fn wscc9_network(power_scale: f64) -> PowerNetwork {
    let k = power_scale;
    let mut buses: Vec<Bus> = (1..=9)
        .map(|id| Bus { id, kind: BusKind::Pq, v_set: 1.0, p_gen: 0.0, p_load: 0.0, q_load: 0.0 })
        .collect();
    buses[0].kind = BusKind::Slack;
    buses[0].v_set = 1.04;
    buses[1] = Bus { id: 2, kind: BusKind::Pv, v_set: 1.025, p_gen: 1.63 * k, p_load: 0.0, q_load: 0.0 };
    buses[2] = Bus { id: 3, kind: BusKind::Pv, v_set: 1.025, p_gen: 0.85 * k, p_load: 0.0, q_load: 0.0 };
    for (bus, p, q) in [(5, 1.25, 0.5), (6, 0.9, 0.3), (8, 1.0, 0.35)] {
        buses[bus - 1].p_load = p * k;
        buses[bus - 1].q_load = q * k;
    }
    let branches = BRANCHES
        .iter()
        .map(|&(from, to, r, x, b)| Branch { from, to, r: r / k, x: x / k, b: b * k, in_service: true })
        .collect();
    PowerNetwork { buses, branches, base_frequency: 60.0 }
}

/// Full test system with the given machine model and events.
pub fn wscc9(power_scale: f64, model: MachineModel, events: Vec<NetworkEvent>) -> SystemConfig {
    SystemConfig {
        network: wscc9_network(power_scale),
        generators: machines().iter().map(|g| g.rebased(power_scale)).collect(),
        model,
        events,
    }
}

/// Trip of the line between buses 5 and 7 at `time`.
pub fn line_trip(time: f64) -> NetworkEvent {
    NetworkEvent { time, change: NetworkChange::TripBranch { from: 5, to: 7 } }
}
