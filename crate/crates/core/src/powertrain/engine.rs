use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::rpm_to_rad_s;
use crate::interp::{lerp, Axis, Curve, Table2};
use crate::{Error, Result};

/// Tolerance on the torque-curve check, N·m. Absorbs rounding in
/// `pe / omega` round trips.
const TORQUE_SLACK: f64 = 1e-9;

/// Engine fuel-rate map over (speed, torque) with its external
/// characteristic (maximum torque) curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineMap {
    fuel: Table2,
    max_torque: Curve,
}

impl EngineMap {
    /// `fuel` is indexed by speed (x) and torque (y) in g/s; `max_torque`
    /// holds one value per speed node.
    pub fn new(fuel: Table2, max_torque: Vec<f64>) -> Result<Self> {
        if let Some(v) = fuel.values().iter().find(|v| **v < 0.0) {
            return Err(Error::Config(alloc::format!("negative fuel rate {v} in engine map")));
        }
        let curve = Curve::new(fuel.x().points().to_vec(), max_torque)?;
        let (tlo, thi) = (fuel.y().first(), fuel.y().last());
        if let Some(t) = curve.ys().iter().find(|t| **t < tlo || **t > thi) {
            return Err(Error::Config(alloc::format!(
                "max torque {t} outside torque grid [{tlo}, {thi}]"
            )));
        }
        Ok(Self { fuel, max_torque: curve })
    }

    pub fn fuel_table(&self) -> &Table2 {
        &self.fuel
    }

    pub fn speed_grid(&self) -> &Axis {
        self.fuel.x()
    }

    pub fn torque_grid(&self) -> &Axis {
        self.fuel.y()
    }

    pub fn max_torque_curve(&self) -> &Curve {
        &self.max_torque
    }

    pub fn max_torque(&self, ne: f64) -> Result<f64> {
        self.max_torque.eval(ne, "engine speed")
    }

    /// Fuel rate in g/s at speed `ne` (rpm) and torque `te` (N·m).
    pub fn fuel_rate(&self, ne: f64, te: f64) -> Result<f64> {
        let limit = self.max_torque(ne)?;
        if te > limit + TORQUE_SLACK {
            return Err(Error::AboveTorqueCurve {
                speed: ne,
                torque: te,
                limit,
            });
        }
        let te = te.min(limit).min(self.fuel.y().last());
        self.fuel.eval(ne, te, "engine speed", "engine torque")
    }

    /// Maximum engine power (kW) along the external characteristic.
    pub fn max_power(&self, ne: f64) -> Result<f64> {
        Ok(self.max_torque(ne)? * rpm_to_rad_s(ne) / 1000.0)
    }

    /// Largest fuel rate attainable anywhere inside the feasible envelope
    /// (speed grid × [min torque, max torque curve]).
    ///
    /// A bilinear patch restricted to a convex polygon peaks on its boundary,
    /// so it is enough to check feasible nodes, the pieces of the torque
    /// curve between grid lines, and the apex of each piece's parabola.
    pub fn envelope_fuel_max(&self) -> f64 {
        let sx = self.fuel.x().points();
        let ty = self.fuel.y().points();
        let tc = self.max_torque.ys();
        let mut best = f64::NEG_INFINITY;

        for (i, &cap) in tc.iter().enumerate() {
            for (j, &t) in ty.iter().enumerate() {
                if t <= cap {
                    best = best.max(self.fuel.node(i, j));
                }
            }
        }

        let eval = |n: f64, t: f64| {
            self.fuel
                .eval(n, t, "engine speed", "engine torque")
                .unwrap_or(f64::NEG_INFINITY)
        };

        for i in 0..sx.len() - 1 {
            let (n0, n1) = (sx[i], sx[i + 1]);
            let (t0, t1) = (tc[i], tc[i + 1]);
            // split the curve segment where it crosses torque grid lines
            let mut cuts: Vec<f64> = alloc::vec![0.0, 1.0];
            if t1 != t0 {
                for &g in ty {
                    let s = (g - t0) / (t1 - t0);
                    if s > 0.0 && s < 1.0 {
                        cuts.push(s);
                    }
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            for w in cuts.windows(2) {
                let at = |s: f64| eval(lerp(n0, n1, s), lerp(t0, t1, s));
                let (sa, sb) = (w[0], w[1]);
                let fa = at(sa);
                let fb = at(sb);
                let fm = at(0.5 * (sa + sb));
                best = best.max(fa).max(fb);
                // quadratic through the three samples, u in [0, 1]
                let a = 2.0 * (fa + fb - 2.0 * fm);
                let b = 4.0 * fm - 3.0 * fa - fb;
                if a < 0.0 {
                    let u = -b / (2.0 * a);
                    if u > 0.0 && u < 1.0 {
                        best = best.max(at(lerp(sa, sb, u)));
                    }
                }
            }
        }
        best
    }

    /// Rescale the fuel table so that [`EngineMap::envelope_fuel_max`] equals
    /// `fuel_max`.
    pub fn scaled_to_fuel_max(mut self, fuel_max: f64) -> Result<Self> {
        let current = self.envelope_fuel_max();
        if !(current > 0.0) || !(fuel_max > 0.0) {
            return Err(Error::Config("cannot rescale engine map to non-positive fuel".into()));
        }
        let k = fuel_max / current;
        self.fuel.map_values(|v| v * k);
        Ok(self)
    }
}
