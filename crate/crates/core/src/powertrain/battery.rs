use alloc::vec;

use serde::{Deserialize, Serialize};

use crate::interp::Curve;
use crate::{Error, Result};

/// Internal-resistance battery pack with an SOC-dependent discharge limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryPack {
    /// Open-circuit voltage, V.
    pub voc: f64,
    /// Internal resistance, Ω.
    pub rb: f64,
    /// Capacity, Ah.
    pub cb: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_init: f64,
    /// Maximum discharge power (kW) versus SOC.
    pub p_lim_curve: Curve,
    /// Absolute power limit in either direction, kW.
    pub p_abs_max: f64,
}

impl Default for BatteryPack {
    fn default() -> Self {
        Self {
            voc: 600.0,
            rb: 0.05,
            cb: 99.0,
            soc_min: 0.3,
            soc_max: 0.8,
            soc_init: 0.5,
            p_lim_curve: Curve::new(vec![0.3, 0.4, 1.0], vec![0.0, 220.0, 220.0])
                .expect("static curve"),
            p_abs_max: 220.0,
        }
    }
}

impl BatteryPack {
    pub fn validate(&self) -> Result<()> {
        if !(self.voc > 0.0 && self.rb > 0.0 && self.cb > 0.0) {
            return Err(Error::Config("battery voc, rb and cb must be positive".into()));
        }
        if !(0.0 <= self.soc_min
            && self.soc_min < self.soc_init
            && self.soc_init < self.soc_max
            && self.soc_max <= 1.0)
        {
            return Err(Error::Config(
                "battery SOC bounds must satisfy 0 <= min < init < max <= 1".into(),
            ));
        }
        if !(self.p_abs_max > 0.0) {
            return Err(Error::Config("battery p_abs_max must be positive".into()));
        }
        if self.p_lim_curve.max_value() > self.p_abs_max {
            return Err(Error::Config("p_lim_curve exceeds p_abs_max".into()));
        }
        Ok(())
    }

    /// SOC change over `dt` seconds at battery power `ps_kw` (charging
    /// positive).
    ///
    /// The per-second step is `(sqrt(Voc² + 4·Ps·Rb) − Voc) / (7200·Cb·Rb)` with
    /// `Ps` in watts. The numerator is evaluated in the algebraically equal
    /// form `4·Ps·Rb / (sqrt(Voc² + 4·Ps·Rb) + Voc)`, which keeps full relative
    /// precision for small powers and makes the sign follow `Ps` exactly.
    pub fn soc_step(&self, ps_kw: f64, dt: f64) -> Result<f64> {
        let p_w = ps_kw * 1000.0;
        let disc = self.voc * self.voc + 4.0 * p_w * self.rb;
        if disc < 0.0 || !disc.is_finite() {
            return Err(Error::InfeasiblePower { power_kw: ps_kw });
        }
        let num = 4.0 * p_w * self.rb / (libm::sqrt(disc) + self.voc);
        Ok(num / (7200.0 * self.cb * self.rb) * dt)
    }

    /// Maximum discharge power at `soc`, kW. Zero at or below `soc_min`.
    pub fn max_discharge(&self, soc: f64) -> f64 {
        if soc <= self.soc_min {
            return 0.0;
        }
        self.p_lim_curve.eval_clamped(soc).clamp(0.0, self.p_abs_max)
    }

    /// Maximum charge power, kW.
    pub fn max_charge(&self) -> f64 {
        self.p_abs_max
    }
}
