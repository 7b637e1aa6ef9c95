//! Run configuration. Every numeric default of the pipeline lives here;
//! missing keys take their defaults when deserialising.

use serde::{Deserialize, Serialize};

use crate::ahp::{pattern_weights, WeightMode};
use crate::baseline::RuleConfig;
use crate::cycle::DEFAULT_SEED;
use crate::emt::{DpConfig, WeightSet};
use crate::objectives::{ObjectiveParams, PatternWeights};
use crate::patterns::DrivingPattern;
use crate::powertrain::{BatteryPack, VehicleParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightsConfig {
    pub mode: WeightMode,
    /// Explicit weights override `mode` for their pattern.
    pub low: Option<PatternWeights>,
    pub medium: Option<PatternWeights>,
    pub high: Option<PatternWeights>,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self {
            mode: WeightMode::Constants,
            low: None,
            medium: None,
            high: None,
        }
    }
}

impl WeightsConfig {
    pub fn resolve(&self) -> Result<WeightSet> {
        let mut out = [PatternWeights::new(1.0, 0.0, 0.0)?; 3];
        for p in DrivingPattern::ALL {
            let explicit = match p {
                DrivingPattern::LowSpeed => self.low,
                DrivingPattern::MediumSpeed => self.medium,
                DrivingPattern::HighSpeed => self.high,
            };
            let w = explicit.unwrap_or_else(|| pattern_weights(p, self.mode).weights);
            w.validate()?;
            out[p.index()] = w;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CycleConfig {
    /// Seed of the bundled synthetic cycle.
    pub seed: u64,
    /// Accept non-uniform time steps.
    pub dt_tolerant: bool,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            dt_tolerant: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub battery: BatteryPack,
    pub vehicle: VehicleParams,
    pub objectives: ObjectiveParams,
    pub weights: WeightsConfig,
    pub dp: DpConfig,
    pub rule: RuleConfig,
    pub cycle: CycleConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.battery.validate()?;
        self.vehicle.validate()?;
        self.objectives.validate()?;
        self.dp.validate()?;
        self.weights.resolve()?;
        let b = &self.battery;
        let r = &self.rule;
        if !(b.soc_min < r.soc_low && r.soc_low < r.soc_high && r.soc_high < b.soc_max) {
            return Err(Error::Config("rule needs soc_min < soc_low < soc_high < soc_max".into()));
        }
        Ok(())
    }
}
