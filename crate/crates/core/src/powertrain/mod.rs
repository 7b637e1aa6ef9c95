//! Quasi-static component models and the electric / driving power balances.
//!
//! Sign conventions: battery power `ps` is positive when charging; machine
//! powers `pa`, `pb` are shaft powers, positive when motoring (drawing from
//! the electric bus), so the bus sees `p · η^(−sgn p)`.

mod battery;
mod engine;
mod machine;
pub mod synth;
mod vehicle;

use serde::{Deserialize, Serialize};

pub use battery::BatteryPack;
pub use engine::EngineMap;
pub use machine::MachineMap;
pub use vehicle::VehicleParams;

use crate::Result;

pub const RPM_TO_RAD_S: f64 = core::f64::consts::PI / 30.0;

#[inline]
pub fn rpm_to_rad_s(n: f64) -> f64 {
    n * RPM_TO_RAD_S
}

#[inline]
pub fn rad_s_to_rpm(w: f64) -> f64 {
    w / RPM_TO_RAD_S
}

/// Instantaneous power flows of one stage, all in kW.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerFlow {
    /// Battery, charging positive.
    pub ps: f64,
    /// Electric load demand.
    pub pc: f64,
    /// Electric transmission loss.
    pub pl: f64,
    /// Machine A shaft power, motoring positive.
    pub pa: f64,
    /// Machine B shaft power, motoring positive.
    pub pb: f64,
    /// Engine.
    pub pe: f64,
    /// Driving demand handled by the powertrain (after service brakes).
    pub pd: f64,
    /// Whole-process loss.
    pub ploss: f64,
}

#[inline]
fn bus_power(p: f64, eta: f64) -> f64 {
    if p > 0.0 {
        p / eta
    } else if p < 0.0 {
        p * eta
    } else {
        0.0
    }
}

/// Left-minus-right residuals of the electric balance
/// `Ps + Pc + Pl + Pa·ηa^(−sgn Pa) + Pb·ηb^(−sgn Pb) = 0` and the drive
/// balance `Pe·ηe = Pd + Pc + P′ + Ps`.
pub fn power_balance_residuals(flow: &PowerFlow, eta_a: f64, eta_b: f64, mech_path_eff: f64) -> (f64, f64) {
    let elec = flow.ps + flow.pc + flow.pl + bus_power(flow.pa, eta_a) + bus_power(flow.pb, eta_b);
    let drive = flow.pe * mech_path_eff - (flow.pd + flow.pc + flow.ploss + flow.ps);
    (elec, drive)
}

pub(crate) fn machine_bus_power(p: f64, eta: f64) -> f64 {
    bus_power(p, eta)
}

/// Every component model needed to evaluate a stage.
#[derive(Debug, Clone, PartialEq)]
pub struct PowertrainModel {
    pub engine: EngineMap,
    pub machine_a: MachineMap,
    pub machine_b: MachineMap,
    pub battery: BatteryPack,
    pub vehicle: VehicleParams,
}

impl PowertrainModel {
    pub fn validate(&self) -> Result<()> {
        self.battery.validate()?;
        self.vehicle.validate()
    }

    /// Bundled synthetic maps with default battery and vehicle parameters.
    pub fn synthetic() -> Self {
        Self {
            engine: synth::engine_map(),
            machine_a: synth::machine_a_map(),
            machine_b: synth::machine_b_map(),
            battery: BatteryPack::default(),
            vehicle: VehicleParams::default(),
        }
    }
}
