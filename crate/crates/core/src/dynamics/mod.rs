//! Multi-machine power system simulator producing ground-truth state
//! trajectories and PMU-style terminal measurements.
//!
//! Machines use the two-axis model with a first-order exciter and a
//! first-order turbine-governor (six states each) or the classical model
//! (two states each). The network is Kron-reduced to the generator terminal
//! buses with constant-impedance loads; events swap the reduced admittance
//! at sample boundaries.

mod integrate;
mod machine;
mod network;
mod system;
mod trajectory;
pub mod wscc;

pub use integrate::rk4_step;
pub use machine::{ChannelClass, GeneratorParams, MachineModel, StateKind, StatorSolution};
pub use network::{kron_reduce, Branch, Bus, BusKind, PowerFlowSolution, PowerNetwork, C64};
pub use system::{NetworkChange, NetworkEvent, NetworkSchedule, PowerSystem, Setpoint, SystemConfig};
pub use trajectory::Trajectory;

/// PMU reporting interval (50 samples per second).
pub const SAMPLE_INTERVAL: f64 = 0.02;
/// Internal integration step of the truth simulation.
pub const TRUTH_STEP: f64 = 0.001;
