//! Per-stage records of a simulated strategy and their aggregates.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::patterns::DrivingPattern;

/// One stage of a trajectory. Powers in kW, speeds in rpm, torques in N·m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// s
    pub t: f64,
    /// km/h
    pub v: f64,
    pub pattern: DrivingPattern,
    /// s
    pub dt: f64,
    pub soc: f64,
    pub soc_next: f64,
    pub ne: f64,
    pub te: f64,
    pub ta: f64,
    pub tb: f64,
    pub ps: f64,
    pub pa: f64,
    pub pb: f64,
    pub pe: f64,
    /// Demanded drive power (before service brakes).
    pub pd: f64,
    pub pc: f64,
    /// g/s
    pub fuel: f64,
    pub j1_bar: f64,
    pub j2_bar: f64,
    pub j3_bar: f64,
    pub cost: f64,
    /// The controller could not serve the stage within limits.
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub fuel_l: f64,
    pub composite: f64,
    pub final_soc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub strategy: String,
    pub soc_init: f64,
    pub records: Vec<StageRecord>,
}

impl Trajectory {
    pub fn new(strategy: impl Into<String>, soc_init: f64, records: Vec<StageRecord>) -> Self {
        Self {
            strategy: strategy.into(),
            soc_init,
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Integrated fuel in litres at `fuel_density` g/L.
    pub fn fuel_litres(&self, fuel_density: f64) -> f64 {
        self.records.iter().map(|r| r.fuel * r.dt).sum::<f64>() / fuel_density
    }

    pub fn composite_cost(&self) -> f64 {
        self.records.iter().map(|r| r.cost).sum()
    }

    pub fn final_soc(&self) -> f64 {
        self.records.last().map_or(self.soc_init, |r| r.soc_next)
    }

    pub fn totals(&self, fuel_density: f64) -> Totals {
        Totals {
            fuel_l: self.fuel_litres(fuel_density),
            composite: self.composite_cost(),
            final_soc: self.final_soc(),
        }
    }

    pub fn saturated_count(&self) -> usize {
        self.records.iter().filter(|r| r.saturated).count()
    }
}

/// Engine operating-point counts on a speed × torque grid. Points outside
/// the edges fall into the nearest edge bin, so counts always sum to the
/// number of stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub speed_edges: Vec<f64>,
    pub torque_edges: Vec<f64>,
    /// `counts[speed_bin][torque_bin]`
    pub counts: Vec<Vec<u64>>,
}

fn bin(edges: &[f64], x: f64) -> usize {
    let n = edges.len() - 1;
    match edges.iter().position(|&e| x < e) {
        Some(0) => 0,
        Some(i) => (i - 1).min(n - 1),
        None => n - 1,
    }
}

impl Histogram {
    /// Bins of 200 rpm over 500–2500 rpm and 250 N·m over 0–4000 N·m.
    pub fn default_edges() -> (Vec<f64>, Vec<f64>) {
        (
            (0..=10).map(|i| 500.0 + 200.0 * i as f64).collect(),
            (0..=16).map(|i| 250.0 * i as f64).collect(),
        )
    }

    pub fn build(records: &[StageRecord], speed_edges: Vec<f64>, torque_edges: Vec<f64>) -> Self {
        assert!(speed_edges.len() >= 2 && torque_edges.len() >= 2, "histogram needs at least one bin per axis");
        let mut counts = vec![vec![0u64; torque_edges.len() - 1]; speed_edges.len() - 1];
        for r in records {
            counts[bin(&speed_edges, r.ne)][bin(&torque_edges, r.te)] += 1;
        }
        Self {
            speed_edges,
            torque_edges,
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// `(speed bin centre, torque bin centre, count)` rows.
    pub fn rows(&self) -> Vec<(f64, f64, u64)> {
        let mut out = Vec::new();
        for (i, row) in self.counts.iter().enumerate() {
            let s = 0.5 * (self.speed_edges[i] + self.speed_edges[i + 1]);
            for (j, &c) in row.iter().enumerate() {
                let t = 0.5 * (self.torque_edges[j] + self.torque_edges[j + 1]);
                out.push((s, t, c));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PatternStats {
    pub stages: usize,
    pub mean_j1_bar: f64,
    pub mean_j2_bar: f64,
    pub mean_j3_bar: f64,
    pub fuel_l: f64,
    pub composite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: String,
    pub stages: usize,
    pub total_fuel_l: f64,
    pub final_soc: f64,
    pub soc_drift: f64,
    pub total_composite: f64,
    pub saturated_stages: usize,
    pub low: PatternStats,
    pub medium: PatternStats,
    pub high: PatternStats,
    pub histogram: Histogram,
}

impl RunSummary {
    pub fn from_trajectory(traj: &Trajectory, fuel_density: f64) -> Self {
        let mut stats = [PatternStats::default(); 3];
        for r in &traj.records {
            let s = &mut stats[r.pattern.index()];
            s.stages += 1;
            s.mean_j1_bar += r.j1_bar;
            s.mean_j2_bar += r.j2_bar;
            s.mean_j3_bar += r.j3_bar;
            s.fuel_l += r.fuel * r.dt;
            s.composite += r.cost;
        }
        for s in &mut stats {
            if s.stages > 0 {
                let n = s.stages as f64;
                s.mean_j1_bar /= n;
                s.mean_j2_bar /= n;
                s.mean_j3_bar /= n;
            }
            s.fuel_l /= fuel_density;
        }
        let (se, te) = Histogram::default_edges();
        let t = traj.totals(fuel_density);
        Self {
            strategy: traj.strategy.clone(),
            stages: traj.len(),
            total_fuel_l: t.fuel_l,
            final_soc: t.final_soc,
            soc_drift: (t.final_soc - traj.soc_init).abs(),
            total_composite: t.composite,
            saturated_stages: traj.saturated_count(),
            low: stats[0],
            medium: stats[1],
            high: stats[2],
            histogram: Histogram::build(&traj.records, se, te),
        }
    }

    pub fn pattern(&self, p: DrivingPattern) -> &PatternStats {
        match p {
            DrivingPattern::LowSpeed => &self.low,
            DrivingPattern::MediumSpeed => &self.medium,
            DrivingPattern::HighSpeed => &self.high,
        }
    }
}
