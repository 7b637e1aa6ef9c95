use serde::{Deserialize, Serialize};

use super::rad_s_to_rpm;
use crate::{Error, Result};

/// Longitudinal vehicle and transmission parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// m/s²
    pub gravity: f64,
    pub final_drive_ratio: f64,
    /// m
    pub sprocket_radius: f64,
    /// `[c1, c2, c3, c4]`: `n_a = c1·ne + c2·n_out`, `n_b = c3·ne + c4·n_out`.
    pub coupling_coeffs: [f64; 4],
    /// Efficiency of the engine-side mechanical path in the drive balance.
    pub mech_path_eff: f64,
    /// Electrical transmission loss as a fraction of `|pa| + |pb| + |ps|`.
    pub elec_loss_frac: f64,
    /// Whole-process loss as a fraction of `|pd|`.
    pub proc_loss_frac: f64,
    /// g/L
    pub fuel_density: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 40_000.0,
            gravity: 9.81,
            final_drive_ratio: 4.0,
            sprocket_radius: 0.32,
            coupling_coeffs: [1.6, 0.4, 0.5, 1.2],
            mech_path_eff: 0.95,
            elec_loss_frac: 0.02,
            proc_loss_frac: 0.03,
            fuel_density: 835.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.gravity > 0.0) {
            return Err(Error::Config("mass and gravity must be positive".into()));
        }
        if !(self.final_drive_ratio > 0.0 && self.sprocket_radius > 0.0) {
            return Err(Error::Config("final drive ratio and sprocket radius must be positive".into()));
        }
        if !(self.mech_path_eff > 0.0 && self.mech_path_eff <= 1.0) {
            return Err(Error::Config("mech_path_eff must lie in (0, 1]".into()));
        }
        for (name, v) in [("elec_loss_frac", self.elec_loss_frac), ("proc_loss_frac", self.proc_loss_frac)] {
            if !(0.0..=0.2).contains(&v) {
                return Err(Error::Config(alloc::format!("{name} must lie in [0, 0.2]")));
            }
        }
        if !(self.fuel_density > 0.0) {
            return Err(Error::Config("fuel_density must be positive".into()));
        }
        Ok(())
    }

    /// Driving power demand (kW) over one step from `v0` to `v1` (km/h) on a
    /// surface with drag coefficient `f`. Uses the mean speed of the step.
    /// Braking yields negative power.
    pub fn demanded_drive_power(&self, v0_kmh: f64, v1_kmh: f64, f: f64, dt: f64) -> f64 {
        let (v0, v1) = (v0_kmh / 3.6, v1_kmh / 3.6);
        let v = 0.5 * (v0 + v1);
        let a = (v1 - v0) / dt;
        (self.mass * self.gravity * f * v + self.mass * a * v) / 1000.0
    }

    /// Transmission output shaft speed (rpm) at vehicle speed `v_kmh`.
    pub fn output_speed(&self, v_kmh: f64) -> f64 {
        rad_s_to_rpm(v_kmh / 3.6 / self.sprocket_radius * self.final_drive_ratio)
    }

    /// Machine A and B speeds (rpm) from engine and output speeds.
    pub fn machine_speeds(&self, ne: f64, n_out: f64) -> (f64, f64) {
        let [c1, c2, c3, c4] = self.coupling_coeffs;
        (c1 * ne + c2 * n_out, c3 * ne + c4 * n_out)
    }
}
