//! Raw performance objectives, their normalisation and the weighted
//! composite used as the stage cost.
//!
//! * economy `J1 = fuel + γ1·ΔSOC + γ2·(SOC − SOC0)²`, g/s-equivalent
//! * power reserve `J2 = Pe,max(ne) + Ps,max(SOC) − Pd`, kW
//! * generation reserve `J3 = Pa,max(Ta) + Pb,max(Tb) + Ps,max(SOC) − Pc`, kW

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveParams {
    /// Battery equivalence coefficient, g per unit ΔSOC.
    pub gamma1: f64,
    /// SOC deviation scale.
    pub gamma2: f64,
    /// Reference SOC.
    pub soc0: f64,
    /// g/s
    pub fuel_max: f64,
    /// Largest per-step |ΔSOC|.
    pub dsoc_max: f64,
    /// Largest |SOC − SOC0|.
    pub soc_dev_max: f64,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        Self {
            gamma1: -12_500.0,
            gamma2: 2_000.0,
            soc0: 0.5,
            fuel_max: 72.0,
            dsoc_max: 0.001,
            soc_dev_max: 0.3,
        }
    }
}

impl ObjectiveParams {
    /// Normaliser of `J1`: `fuel_max + γ1·ΔSOC_max + γ2·(SOC − SOC0)²_max`.
    pub fn j1_max(&self) -> Result<f64> {
        let d = self.fuel_max + self.gamma1 * self.dsoc_max + self.gamma2 * self.soc_dev_max * self.soc_dev_max;
        if d > 0.0 && d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Config(alloc::format!("J1 normaliser must be positive, got {d}")))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fuel_max > 0.0 && self.dsoc_max > 0.0 && self.soc_dev_max > 0.0) {
            return Err(Error::Config("fuel_max, dsoc_max and soc_dev_max must be positive".into()));
        }
        self.j1_max().map(|_| ())
    }
}

pub fn j1_raw(fuel: f64, dsoc: f64, soc: f64, p: &ObjectiveParams) -> f64 {
    let dev = soc - p.soc0;
    fuel + p.gamma1 * dsoc + p.gamma2 * dev * dev
}

pub fn j2_raw(pe_max: f64, ps_max: f64, pd: f64) -> f64 {
    pe_max + ps_max - pd
}

pub fn j3_raw(pa_max: f64, pb_max: f64, ps_max: f64, pc: f64) -> f64 {
    pa_max + pb_max + ps_max - pc
}

pub fn j1_norm(j1: f64, p: &ObjectiveParams) -> Result<f64> {
    Ok(j1 / p.j1_max()?)
}

fn reserve_norm(capacity: f64, demand: f64) -> Result<f64> {
    if !(capacity > 0.0) {
        return Err(Error::Config(alloc::format!("reserve capacity must be positive, got {capacity}")));
    }
    Ok(-(capacity - demand) / capacity)
}

/// `−J2 / (Pe,max + Ps,max)`.
pub fn j2_norm(pe_max: f64, ps_max: f64, pd: f64) -> Result<f64> {
    reserve_norm(pe_max + ps_max, pd)
}

/// `−J3 / (Pa,max + Pb,max + Ps,max)`.
pub fn j3_norm(pa_max: f64, pb_max: f64, ps_max: f64, pc: f64) -> Result<f64> {
    reserve_norm(pa_max + pb_max + ps_max, pc)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValues {
    pub j1_raw: f64,
    pub j2_raw: f64,
    pub j3_raw: f64,
    pub j1_bar: f64,
    pub j2_bar: f64,
    pub j3_bar: f64,
}

/// Inputs of one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveInputs {
    pub fuel: f64,
    pub dsoc: f64,
    pub soc: f64,
    pub pe_max: f64,
    pub ps_max: f64,
    pub pd: f64,
    pub pa_max: f64,
    pub pb_max: f64,
    pub pc: f64,
}

impl ObjectiveValues {
    pub fn evaluate(x: &ObjectiveInputs, p: &ObjectiveParams) -> Result<Self> {
        let j1 = j1_raw(x.fuel, x.dsoc, x.soc, p);
        Ok(Self {
            j1_raw: j1,
            j2_raw: j2_raw(x.pe_max, x.ps_max, x.pd),
            j3_raw: j3_raw(x.pa_max, x.pb_max, x.ps_max, x.pc),
            j1_bar: j1_norm(j1, p)?,
            j2_bar: j2_norm(x.pe_max, x.ps_max, x.pd)?,
            j3_bar: j3_norm(x.pa_max, x.pb_max, x.ps_max, x.pc)?,
        })
    }
}

/// Objective weights `(α1, α2, α3)` of one driving pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl PatternWeights {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<Self> {
        let w = Self { alpha1, alpha2, alpha3 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let a = [self.alpha1, self.alpha2, self.alpha3];
        if a.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("pattern weights must be non-negative".into()));
        }
        let s: f64 = a.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Config(alloc::format!("pattern weights sum to {s}, expected 1")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha1, self.alpha2, self.alpha3]
    }
}

/// `α1·J̄1 + α2·J̄2 + α3·J̄3`.
pub fn composite(w: &PatternWeights, v: &ObjectiveValues) -> f64 {
    w.alpha1 * v.j1_bar + w.alpha2 * v.j2_bar + w.alpha3 * v.j3_bar
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bars(j1: f64, j2: f64, j3: f64) -> ObjectiveValues {
        ObjectiveValues {
            j1_bar: j1,
            j2_bar: j2,
            j3_bar: j3,
            ..Default::default()
        }
    }

    #[test]
    fn j1_examples() {
        let p = ObjectiveParams::default();
        assert_eq!(j1_raw(0.0, 0.0, 0.5, &p), 0.0);
        assert!((j1_raw(10.0, 0.0005, 0.5, &p) - 3.75).abs() < 1e-12);
        let at_max = j1_raw(72.0, 0.001, 0.8, &p);
        assert!((at_max - 239.5).abs() < 1e-9);
        assert_eq!(p.j1_max().unwrap(), 239.5);
        assert!((j1_norm(at_max, &p).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(j1_norm(0.0, &p).unwrap(), 0.0);
        assert!((j1_norm(3.75, &p).unwrap() - 0.015_657_620_041_753_653).abs() < 1e-15);
    }

    #[test]
    fn j2_j3_examples() {
        assert_eq!(j2_raw(500.0, 220.0, 0.0), 720.0);
        assert_eq!(j2_raw(500.0, 220.0, 300.0), 420.0);
        assert_eq!(j2_raw(500.0, 220.0, 720.0), 0.0);
        assert_eq!(j3_raw(150.0, 150.0, 220.0, 0.0), 520.0);
        assert_eq!(j3_raw(150.0, 150.0, 220.0, 100.0), 420.0);
        assert_eq!(j3_raw(150.0, 150.0, 220.0, 520.0), 0.0);

        assert_eq!(j2_norm(500.0, 220.0, 0.0).unwrap(), -1.0);
        assert_eq!(j2_norm(500.0, 220.0, 720.0).unwrap(), 0.0);
        assert_eq!(j2_norm(500.0, 220.0, 360.0).unwrap(), -0.5);
        assert_eq!(j3_norm(150.0, 150.0, 220.0, 0.0).unwrap(), -1.0);
        assert_eq!(j3_norm(150.0, 150.0, 220.0, 520.0).unwrap(), 0.0);
        assert_eq!(j3_norm(150.0, 150.0, 220.0, 130.0).unwrap(), -0.75);
        assert!(j2_norm(0.0, 0.0, 1.0).is_err());
        assert!(j3_norm(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn composite_examples() {
        let w = PatternWeights::new(0.67, 0.27, 0.06).unwrap();
        assert!((composite(&w, &bars(1.0, -1.0, -1.0)) - 0.34).abs() < 1e-12);
        assert!((composite(&w, &bars(0.0157, -0.5, -0.75)) - (-0.169_481)).abs() < 1e-12);
        assert_eq!(composite(&w, &bars(0.0, 0.0, 0.0)), 0.0);
        let e1 = PatternWeights::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(composite(&e1, &bars(0.123, 7.0, -9.0)), 0.123);
    }

    #[test]
    fn invalid_weights() {
        assert!(PatternWeights::new(0.5, 0.5, 0.5).is_err());
        assert!(PatternWeights::new(1.2, -0.2, 0.0).is_err());
    }

    #[test]
    fn bad_normaliser() {
        let p = ObjectiveParams {
            gamma1: -1e6,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        assert!(j1_norm(1.0, &p).is_err());
    }
}
