//! Synthetic component maps bundled as defaults.
//!
//! These are plausible stand-ins for a heavy tracked vehicle, not measured
//! data: an ~800 kW diesel whose fuel table is scaled so the envelope maximum
//! is 72 g/s, and two ~150 kW machines whose efficiency peaks at 0.92 at mid
//! speed and torque.

use alloc::vec;
use alloc::vec::Vec;

use super::{rpm_to_rad_s, EngineMap, MachineMap};
use crate::interp::{Axis, Curve, Table2};

/// Fuel rate ceiling the default engine map is scaled to, g/s.
pub const ENGINE_FUEL_MAX: f64 = 72.0;

/// Lower heating value of diesel, kJ/g.
const LHV: f64 = 42.8;

pub fn engine_speed_grid() -> Vec<f64> {
    (0..10).map(|i| 600.0 + 200.0 * i as f64).collect()
}

pub fn engine_max_torque() -> Vec<f64> {
    vec![2200.0, 2700.0, 3100.0, 3400.0, 3600.0, 3600.0, 3550.0, 3450.0, 3300.0, 3200.0]
}

fn engine_fuel(n: f64, t: f64) -> f64 {
    let p = t * rpm_to_rad_s(n) / 1000.0;
    let k = n / 1000.0;
    let friction = 12.0 * k + 6.0 * k * k;
    let ds = (n - 1400.0) / 1000.0;
    let dt = t / 3600.0 - 0.8;
    let eta = 0.47 - 0.05 * ds * ds - 0.04 * dt * dt;
    (p + friction) / (eta * LHV)
}

pub fn engine_map() -> EngineMap {
    let speed = Axis::new(engine_speed_grid()).expect("static grid");
    let torque = Axis::linspace(0.0, 4000.0, 17).expect("static grid");
    let fuel = Table2::from_fn(speed, torque, engine_fuel);
    EngineMap::new(fuel, engine_max_torque())
        .and_then(|m| m.scaled_to_fuel_max(ENGINE_FUEL_MAX))
        .expect("static engine map")
}

fn machine_eff(n: f64, t: f64) -> f64 {
    let ds = (n - 3000.0) / 3000.0;
    let dt = (libm::fabs(t) - 600.0) / 700.0;
    (0.92 - 0.12 * ds * ds - 0.10 * dt * dt).max(0.65)
}

fn machine_map(max_power: [f64; 4]) -> MachineMap {
    let speed = Axis::linspace(0.0, 6000.0, 13).expect("static grid");
    let torque = Axis::linspace(-1200.0, 1200.0, 13).expect("static grid");
    let eff = Table2::from_fn(speed, torque, machine_eff);
    let curve = Curve::new(vec![0.0, 400.0, 800.0, 1200.0], max_power.to_vec()).expect("static curve");
    MachineMap::new(eff, curve).expect("static machine map")
}

pub fn machine_a_map() -> MachineMap {
    machine_map([160.0, 160.0, 145.0, 120.0])
}

pub fn machine_b_map() -> MachineMap {
    machine_map([180.0, 180.0, 160.0, 130.0])
}
