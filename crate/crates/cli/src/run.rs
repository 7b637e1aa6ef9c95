//! Run artifacts: summaries, invariant checks and comparisons.

use emt_core::patterns::{classify_speed, DrivingPattern};
use emt_core::powertrain::BatteryPack;
use emt_core::trajectory::{RunSummary, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleInfo {
    /// File path, or `synthetic`.
    pub source: String,
    pub synthetic: bool,
    pub seed: Option<u64>,
    pub stages: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapping {
    /// Largest gap between commanded and applied battery power, kW.
    pub max_ps_kw: f64,
    /// Largest gap between operating-line and applied engine speed, rpm.
    pub max_ne_rpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSummary {
    pub stages: usize,
    pub soc_nodes: Vec<f64>,
    /// Cost-to-go at stage 0 per node.
    pub v0: Vec<f64>,
    pub v0_at_soc_init: f64,
    pub infeasible_entries: usize,
    pub max_bellman_residual: Option<f64>,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub summary: RunSummary,
    pub cycle: CycleInfo,
    pub snapping: Option<Snapping>,
    pub violations: Vec<String>,
    pub effective_config: RunConfig,
}

/// Everything that breaks a trajectory invariant: SOC outside the battery
/// window, a SOC step that disagrees with the battery model, a broken SOC
/// chain, or a pattern label that disagrees with the speed.
pub fn check_trajectory(traj: &Trajectory, battery: &BatteryPack) -> Vec<String> {
    let mut out = Vec::new();
    let eps = 1e-12;
    for (k, r) in traj.records.iter().enumerate() {
        for (name, s) in [("soc", r.soc), ("soc_next", r.soc_next)] {
            if s < battery.soc_min - eps || s > battery.soc_max + eps {
                out.push(format!(
                    "stage {k}: {name} {s} outside [{}, {}]",
                    battery.soc_min, battery.soc_max
                ));
            }
        }
        match battery.soc_step(r.ps, r.dt) {
            Ok(d) if (r.soc + d - r.soc_next).abs() <= 1e-12 => {}
            _ => out.push(format!("stage {k}: soc_next does not follow the battery model")),
        }
        if let Some(next) = traj.records.get(k + 1) {
            if next.soc != r.soc_next {
                out.push(format!("stage {k}: SOC chain broken ({} then {})", r.soc_next, next.soc));
            }
        }
        if classify_speed(r.v).ok() != Some(r.pattern) {
            out.push(format!("stage {k}: pattern {} does not match speed {}", r.pattern, r.v));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Side {
    pub strategy: String,
    pub fuel_l: f64,
    pub final_soc: f64,
    pub soc_drift: f64,
    pub composite: f64,
    pub saturated_stages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternBreakdown {
    pub pattern: DrivingPattern,
    pub stages: usize,
    pub fuel_l_a: f64,
    pub fuel_l_b: f64,
    pub fuel_change_pct: Option<f64>,
    pub composite_a: f64,
    pub composite_b: f64,
    pub mean_j_bar_a: [f64; 3],
    pub mean_j_bar_b: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: Side,
    pub b: Side,
    /// `(fuel_b − fuel_a) / fuel_b · 100`: positive when `a` burns less.
    pub fuel_change_pct: Option<f64>,
    /// `composite_a − composite_b`.
    pub composite_delta: f64,
    /// `soc_drift_a − soc_drift_b`.
    pub soc_drift_delta: f64,
    pub per_pattern: Vec<PatternBreakdown>,
}

/// Relative fuel saving of `a` against `b`, percent. `None` when `b` is 0.
pub fn fuel_improvement_pct(fuel_a: f64, fuel_b: f64) -> Option<f64> {
    if fuel_a == fuel_b {
        return Some(0.0);
    }
    (fuel_b != 0.0).then(|| (fuel_b - fuel_a) / fuel_b * 100.0)
}

fn side(s: &RunSummary) -> Side {
    Side {
        strategy: s.strategy.clone(),
        fuel_l: s.total_fuel_l,
        final_soc: s.final_soc,
        soc_drift: s.soc_drift,
        composite: s.total_composite,
        saturated_stages: s.saturated_stages,
    }
}

pub fn compare_summaries(a: &RunSummary, b: &RunSummary) -> Comparison {
    let per_pattern = DrivingPattern::ALL
        .iter()
        .map(|&p| {
            let (pa, pb) = (a.pattern(p), b.pattern(p));
            PatternBreakdown {
                pattern: p,
                stages: pa.stages,
                fuel_l_a: pa.fuel_l,
                fuel_l_b: pb.fuel_l,
                fuel_change_pct: fuel_improvement_pct(pa.fuel_l, pb.fuel_l),
                composite_a: pa.composite,
                composite_b: pb.composite,
                mean_j_bar_a: [pa.mean_j1_bar, pa.mean_j2_bar, pa.mean_j3_bar],
                mean_j_bar_b: [pb.mean_j1_bar, pb.mean_j2_bar, pb.mean_j3_bar],
            }
        })
        .collect();
    Comparison {
        a: side(a),
        b: side(b),
        fuel_change_pct: fuel_improvement_pct(a.total_fuel_l, b.total_fuel_l),
        composite_delta: a.total_composite - b.total_composite,
        soc_drift_delta: a.soc_drift - b.soc_drift,
        per_pattern,
    }
}

/// Both trajectories must cover the same cycle: equal time and speed
/// columns.
pub fn same_cycle(a: &Trajectory, b: &Trajectory) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("trajectories differ in length ({} vs {})", a.len(), b.len()));
    }
    for (k, (x, y)) in a.records.iter().zip(&b.records).enumerate() {
        if x.t != y.t || x.v != y.v {
            return Err(format!("trajectories differ at stage {k} (t {} vs {}, v {} vs {})", x.t, y.t, x.v, y.v));
        }
    }
    Ok(())
}
