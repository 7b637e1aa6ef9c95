use serde::{Deserialize, Serialize};

use crate::interp::{Axis, Curve, Table2};
use crate::{Error, Result};

/// Electric machine efficiency map over (speed, torque) and the maximum
/// power available as a function of torque magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineMap {
    eff: Table2,
    max_power: Curve,
}

impl MachineMap {
    pub fn new(eff: Table2, max_power: Curve) -> Result<Self> {
        if let Some(v) = eff.values().iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(Error::Config(alloc::format!("machine efficiency {v} outside (0, 1]")));
        }
        if max_power.xs()[0] < 0.0 {
            return Err(Error::Config("max power curve abscissa must be torque magnitude".into()));
        }
        if let Some(p) = max_power.ys().iter().find(|p| **p < 0.0) {
            return Err(Error::Config(alloc::format!("negative machine max power {p}")));
        }
        Ok(Self { eff, max_power })
    }

    pub fn eff_table(&self) -> &Table2 {
        &self.eff
    }

    pub fn max_power_curve(&self) -> &Curve {
        &self.max_power
    }

    pub fn speed_grid(&self) -> &Axis {
        self.eff.x()
    }

    pub fn torque_grid(&self) -> &Axis {
        self.eff.y()
    }

    /// Conversion efficiency at speed `n` (rpm) and torque `t` (N·m).
    pub fn efficiency(&self, n: f64, t: f64) -> Result<f64> {
        self.eff.eval(n, t, "machine speed", "machine torque")
    }

    /// Maximum power (kW) available at torque magnitude `|t|`.
    pub fn max_power(&self, t: f64) -> Result<f64> {
        self.max_power.eval(t.abs(), "machine torque")
    }
}
