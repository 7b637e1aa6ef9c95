//! Drive cycles: per-second speed, road drag coefficient and electric load,
//! plus the bundled synthetic cycle.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::patterns::{classify_speed, DrivingPattern};
use crate::powertrain::VehicleParams;
use crate::{Error, Result};

/// Length of the bundled synthetic cycle, s.
pub const SYNTH_LEN: usize = 1486;
pub const DEFAULT_SEED: u64 = 7;

/// Allowed deviation from the nominal 1 s spacing.
const DT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// s
    pub t: f64,
    /// km/h
    pub v: f64,
    /// Road drag coefficient.
    pub f: f64,
    /// Electric load demand, kW.
    pub pc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCycle {
    records: Vec<CycleRecord>,
}

/// Validation failure with the offending record index.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("record {index}: {reason}")]
pub struct CycleError {
    pub index: usize,
    pub reason: &'static str,
}

impl DriveCycle {
    /// Validate records. With `uniform` set, consecutive times must be exactly
    /// 1 s apart; otherwise any strictly increasing times are accepted.
    pub fn new(records: Vec<CycleRecord>, uniform: bool) -> core::result::Result<Self, CycleError> {
        if records.is_empty() {
            return Err(CycleError {
                index: 0,
                reason: "cycle is empty",
            });
        }
        for (i, r) in records.iter().enumerate() {
            let err = |reason| Err(CycleError { index: i, reason });
            if !(r.t.is_finite() && r.v.is_finite() && r.f.is_finite() && r.pc.is_finite()) {
                return err("non-finite value");
            }
            if r.v < 0.0 {
                return err("negative speed");
            }
            if r.f < 0.0 {
                return err("negative drag coefficient");
            }
            if r.pc < 0.0 {
                return err("negative electric demand");
            }
            if i > 0 {
                let dt = r.t - records[i - 1].t;
                if !(dt > 0.0) {
                    return err("time not strictly increasing");
                }
                if uniform && (dt - 1.0).abs() > DT_TOL {
                    return err("time spacing is not 1 s");
                }
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[CycleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.v).collect()
    }

    /// Step length of stage `k`; the last stage repeats the previous spacing.
    pub fn dt(&self, k: usize) -> f64 {
        let n = self.records.len();
        if k + 1 < n {
            self.records[k + 1].t - self.records[k].t
        } else if n >= 2 {
            self.records[n - 1].t - self.records[n - 2].t
        } else {
            1.0
        }
    }

    /// Contiguous slice `[start, end)` as a new cycle.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Shape(alloc::format!("bad slice {start}..{end} of {}", self.len())));
        }
        Ok(Self {
            records: self.records[start..end].to_vec(),
        })
    }

    /// Per-stage demands for `vehicle`. The final stage holds its speed.
    pub fn stage_demands(&self, vehicle: &VehicleParams) -> Result<Vec<StageDemand>> {
        let n = self.records.len();
        (0..n)
            .map(|k| {
                let r = self.records[k];
                let v_next = if k + 1 < n { self.records[k + 1].v } else { r.v };
                let dt = self.dt(k);
                Ok(StageDemand {
                    t: r.t,
                    v: r.v,
                    f: r.f,
                    pc: r.pc,
                    pd: vehicle.demanded_drive_power(r.v, v_next, r.f, dt),
                    dt,
                    pattern: classify_speed(r.v)?,
                })
            })
            .collect()
    }
}

/// Everything a stage needs from the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageDemand {
    pub t: f64,
    pub v: f64,
    pub f: f64,
    pub pc: f64,
    /// Driving demand, kW.
    pub pd: f64,
    pub dt: f64,
    pub pattern: DrivingPattern,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    // 53 random mantissa bits
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn round_to(x: f64, step: f64) -> f64 {
    libm::round(x / step) * step
}

struct Episode {
    len: usize,
    speed: (f64, f64),
    drag: (f64, f64),
    load: (f64, f64),
    stops: bool,
}

/// Deterministic 1486 s synthetic cycle: off-road low speed with heavy
/// electric load, medium-speed transfer, high-speed road running, a second
/// low-speed phase with stops, and a medium-speed run that ends at rest.
///
/// This is a stand-in profile, not measured vehicle data.
pub fn synth_cycle(seed: u64) -> DriveCycle {
    const M: f64 = 40_000.0;
    const ACC_MAX: f64 = 0.5; // m/s²
    const DEC_MAX: f64 = 0.8;
    const ACC_POWER: f64 = 250_000.0; // W reserved for acceleration

    let episodes = [
        Episode { len: 300, speed: (14.0, 30.0), drag: (0.07, 0.10), load: (70.0, 110.0), stops: true },
        Episode { len: 340, speed: (40.0, 56.0), drag: (0.03, 0.05), load: (20.0, 40.0), stops: false },
        Episode { len: 290, speed: (65.0, 74.0), drag: (0.02, 0.03), load: (15.0, 25.0), stops: false },
        Episode { len: 270, speed: (8.0, 28.0), drag: (0.06, 0.09), load: (90.0, 130.0), stops: true },
        Episode { len: 286, speed: (38.0, 55.0), drag: (0.03, 0.05), load: (20.0, 40.0), stops: false },
    ];
    debug_assert_eq!(episodes.iter().map(|e| e.len).sum::<usize>(), SYNTH_LEN);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(SYNTH_LEN);
    let mut v = 0.0f64; // m/s
    let mut t = 0usize;

    for (ei, ep) in episodes.iter().enumerate() {
        let last_episode = ei + 1 == episodes.len();
        let mut left = ep.len;
        while left > 0 {
            let hold = (uniform(&mut rng, 25.0, 60.0) as usize).min(left);
            let stop = ep.stops && uniform(&mut rng, 0.0, 1.0) < 0.2;
            let target_kmh = if stop { 0.0 } else { uniform(&mut rng, ep.speed.0, ep.speed.1) };
            let f = uniform(&mut rng, ep.drag.0, ep.drag.1);
            let pc = uniform(&mut rng, ep.load.0, ep.load.1);
            for s in 0..hold {
                let remaining = left - s;
                let target = if last_episode && remaining <= 30 {
                    0.0
                } else {
                    target_kmh / 3.6
                };
                let ripple = 0.03 * libm::sin(0.37 * t as f64);
                records.push(CycleRecord {
                    t: t as f64,
                    v: round_to(v * 3.6, 0.01),
                    f: round_to(f + 0.002 * ripple, 1e-4),
                    pc: round_to((pc * (1.0 + ripple)).max(0.0), 0.1),
                });
                let acc = (ACC_POWER / (M * v.max(1.0))).min(ACC_MAX);
                let dv = (target - v).clamp(-DEC_MAX, acc);
                v = (v + dv).max(0.0);
                t += 1;
            }
            left -= hold;
        }
    }
    DriveCycle::new(records, true).expect("synthetic cycle is valid")
}
