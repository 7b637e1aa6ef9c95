//! Rule-based comparison controller: an engine power follower with an SOC
//! band.
//!
//! Each stage the rule picks a battery power, derives the engine power from
//! the drive balance, places the engine on its best-fuel operating line and
//! then snaps the decision onto the DP action grid, so the controller only
//! ever uses decisions the DP could also have chosen.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::emt::{ActionCandidate, EmtAction, EmtProblem};
use crate::dp::DecisionProblem;
use crate::objectives::{composite, ObjectiveInputs, ObjectiveValues};
use crate::powertrain::{rpm_to_rad_s, EngineMap, PowertrainModel};
use crate::trajectory::{StageRecord, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Charge below this SOC.
    pub soc_low: f64,
    /// Assist above this SOC.
    pub soc_high: f64,
    /// kW
    pub charge_power: f64,
    /// kW
    pub assist_power: f64,
    /// Power spacing of the engine operating line, kW.
    pub opline_power_step: f64,
    /// Speed spacing used when searching the operating line, rpm.
    pub opline_speed_step: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            soc_low: 0.45,
            soc_high: 0.55,
            charge_power: 50.0,
            assist_power: 50.0,
            opline_power_step: 5.0,
            opline_speed_step: 10.0,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self, model: &PowertrainModel) -> Result<()> {
        let b = &model.battery;
        if !(b.soc_min < self.soc_low && self.soc_low < self.soc_high && self.soc_high < b.soc_max) {
            return Err(Error::Config("rule needs soc_min < soc_low < soc_high < soc_max".into()));
        }
        if !(self.charge_power > 0.0 && self.charge_power <= b.max_charge()) {
            return Err(Error::Config("rule.charge_power must be in (0, battery charge limit]".into()));
        }
        if !(self.assist_power >= 0.0 && self.assist_power <= b.p_abs_max) {
            return Err(Error::Config("rule.assist_power must be in [0, battery limit]".into()));
        }
        if !(self.opline_power_step > 0.0 && self.opline_speed_step > 0.0) {
            return Err(Error::Config("operating-line steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpPoint {
    /// kW
    pub power: f64,
    pub ne: f64,
    pub te: f64,
    /// g/s
    pub fuel: f64,
}

/// Lowest-fuel engine point for each power level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingLine {
    points: Vec<OpPoint>,
}

impl OperatingLine {
    pub fn from_map(engine: &EngineMap, power_step: f64, speed_step: f64) -> Result<Self> {
        let grid = engine.speed_grid();
        let (lo, hi) = (grid.first(), grid.last());
        let n_speeds = libm::floor((hi - lo) / speed_step) as usize + 1;
        let speeds: Vec<f64> = (0..n_speeds)
            .map(|i| lo + speed_step * i as f64)
            .chain(core::iter::once(hi))
            .filter(|&n| n > 0.0 && n <= hi)
            .collect();
        let p_top = speeds
            .iter()
            .filter_map(|&n| engine.max_power(n).ok())
            .fold(0.0f64, f64::max);
        let mut points = Vec::new();
        let mut p = 0.0;
        while p <= p_top + 1e-9 {
            let mut best: Option<OpPoint> = None;
            for &n in &speeds {
                let te = p * 1000.0 / rpm_to_rad_s(n);
                let Ok(fuel) = engine.fuel_rate(n, te) else { continue };
                if best.is_none_or(|b| fuel < b.fuel) {
                    best = Some(OpPoint { power: p, ne: n, te, fuel });
                }
            }
            if let Some(b) = best {
                points.push(b);
            }
            p += power_step;
        }
        if points.is_empty() {
            return Err(Error::Empty("engine operating line"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[OpPoint] {
        &self.points
    }

    pub fn max_power(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.power)
    }

    /// Engine speed for power `p` kW, interpolated between levels and held
    /// at the ends.
    pub fn speed_for(&self, p: f64) -> f64 {
        let pts = &self.points;
        if p <= pts[0].power {
            return pts[0].ne;
        }
        for w in pts.windows(2) {
            if p <= w[1].power {
                let t = (p - w[0].power) / (w[1].power - w[0].power);
                return w[0].ne + t * (w[1].ne - w[0].ne);
            }
        }
        pts[pts.len() - 1].ne
    }
}

/// Battery and engine power requested by the rule before snapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleCommand {
    /// Battery power, charging positive, kW.
    pub ps: f64,
    /// Engine power, kW.
    pub pe: f64,
    /// The demand exceeds engine plus battery capability.
    pub saturated: bool,
}

/// Branch logic of the rule.
///
/// `engine_cap` is the largest engine power available (kW). Braking demand
/// is recovered into the battery up to its charge limit.
pub fn rule_command(soc: f64, pd: f64, pc: f64, model: &PowertrainModel, rule: &RuleConfig, engine_cap: f64) -> RuleCommand {
    let veh = &model.vehicle;
    let bat = &model.battery;
    let eta = veh.mech_path_eff;
    let required = pd + pc + veh.proc_loss_frac * pd.abs();
    let cap = engine_cap * eta;
    let mut saturated = false;
    let ps = if required < 0.0 {
        (-required).min(bat.max_charge())
    } else if required > cap {
        let need = required - cap;
        let avail = bat.max_discharge(soc);
        saturated = need > avail;
        -need.min(avail)
    } else if soc < rule.soc_low {
        rule.charge_power.min(cap - required).min(bat.max_charge())
    } else if soc > rule.soc_high {
        -rule.assist_power.min(required).min(bat.max_discharge(soc))
    } else {
        0.0
    };
    let pe = ((required + ps) / eta).max(0.0);
    RuleCommand { ps, pe, saturated }
}

/// Outcome of one rule stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleDecision {
    pub command: RuleCommand,
    /// Operating-line engine speed before snapping, rpm.
    pub ne_command: f64,
    /// Snapped grid decision, when any grid decision is admissible.
    pub candidate: Option<ActionCandidate>,
}

fn nearest(values: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if (v - x).abs() < (values[best] - x).abs() {
            best = i;
        }
    }
    best
}

/// Precomputed pieces the rule reuses every stage.
#[derive(Debug, Clone)]
pub struct RuleController {
    pub rule: RuleConfig,
    pub opline: OperatingLine,
    engine_cap: f64,
}

impl RuleController {
    pub fn new(problem: &EmtProblem, rule: RuleConfig) -> Result<Self> {
        rule.validate(&problem.model)?;
        let opline = OperatingLine::from_map(&problem.model.engine, rule.opline_power_step, rule.opline_speed_step)?;
        let engine_cap = problem
            .grid
            .ne
            .iter()
            .filter_map(|&n| problem.model.engine.max_power(n).ok())
            .fold(0.0f64, f64::max);
        Ok(Self { rule, opline, engine_cap })
    }

    /// Largest engine power on the DP speed grid, kW.
    pub fn engine_cap(&self) -> f64 {
        self.engine_cap
    }

    /// Apply the rule at stage `k` and snap the result to the action grid.
    ///
    /// The exact grid point nearest to the command is used when admissible.
    /// Otherwise the admissible decision closest in (battery level, engine
    /// speed, machine A torque) grid steps, compared in that order, is used.
    pub fn step(&self, problem: &EmtProblem, stage: &crate::emt::EmtStage, k: usize, soc: f64) -> RuleDecision {
        let d = &problem.demands[k];
        let command = rule_command(soc, d.pd, d.pc, &problem.model, &self.rule, self.engine_cap);
        let ne_command = self.opline.speed_for(command.pe);
        let g = &problem.grid;
        let target = EmtAction {
            ne: nearest(&g.ne, ne_command) as u16,
            ta: nearest(&g.ta, 0.0) as u16,
            level: nearest(&g.ps_levels, command.ps) as u16,
        };
        let dist = |a: EmtAction| {
            (
                (a.level as i32 - target.level as i32).abs(),
                (a.ne as i32 - target.ne as i32).abs(),
                (a.ta as i32 - target.ta as i32).abs(),
            )
        };
        let mut best: Option<(ActionCandidate, (i32, i32, i32))> = None;
        for c in stage.candidates.iter().flatten() {
            if !problem.admissible(c, soc) || problem.objective_values(c, k, soc).is_err() {
                continue;
            }
            let dc = dist(c.action);
            if best.as_ref().is_none_or(|(_, b)| dc < *b) {
                best = Some((*c, dc));
            }
        }
        RuleDecision {
            command,
            ne_command,
            candidate: best.map(|(c, _)| c),
        }
    }
}

/// Rule trajectory with snapping diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleRun {
    pub trajectory: Trajectory,
    /// Largest `|Ps − Ps,command|`, kW.
    pub max_ps_snap: f64,
    /// Largest `|ne − ne,command|`, rpm.
    pub max_ne_snap: f64,
}

/// Record for a stage with no admissible grid decision: engine at its
/// limit, battery idle, machines off.
fn saturation_record(problem: &EmtProblem, ctl: &RuleController, k: usize, soc: f64) -> Result<StageRecord> {
    let d = &problem.demands[k];
    let m = &problem.model;
    let ne = problem
        .grid
        .ne
        .iter()
        .copied()
        .max_by(|a, b| {
            let pa = m.engine.max_power(*a).unwrap_or(0.0);
            let pb = m.engine.max_power(*b).unwrap_or(0.0);
            pa.partial_cmp(&pb).unwrap_or(core::cmp::Ordering::Equal)
        })
        .ok_or(Error::Empty("engine speed grid"))?;
    let te = m.engine.max_torque(ne)?;
    let fuel = m.engine.fuel_rate(ne, te)?;
    let pe = ctl.engine_cap;
    let v = ObjectiveValues::evaluate(
        &ObjectiveInputs {
            fuel,
            dsoc: 0.0,
            soc,
            pe_max: pe,
            ps_max: m.battery.max_discharge(soc),
            pd: d.pd,
            pa_max: m.machine_a.max_power(0.0)?,
            pb_max: m.machine_b.max_power(0.0)?,
            pc: d.pc,
        },
        &problem.params,
    )?;
    Ok(StageRecord {
        t: d.t,
        v: d.v,
        pattern: d.pattern,
        dt: d.dt,
        soc,
        soc_next: soc,
        ne,
        te,
        ta: 0.0,
        tb: 0.0,
        ps: 0.0,
        pa: 0.0,
        pb: 0.0,
        pe,
        pd: d.pd,
        pc: d.pc,
        fuel,
        j1_bar: v.j1_bar,
        j2_bar: v.j2_bar,
        j3_bar: v.j3_bar,
        cost: composite(&problem.weights_for(d.pattern), &v),
        saturated: true,
    })
}

/// Forward simulation of the rule from the battery's initial SOC.
pub fn simulate_rule(problem: &EmtProblem, rule: RuleConfig) -> Result<RuleRun> {
    simulate_rule_from(problem, rule, problem.model.battery.soc_init)
}

pub fn simulate_rule_from(problem: &EmtProblem, rule: RuleConfig, soc0: f64) -> Result<RuleRun> {
    let ctl = RuleController::new(problem, rule)?;
    let mut soc = soc0;
    let mut records = Vec::with_capacity(problem.horizon());
    let (mut max_ps_snap, mut max_ne_snap) = (0.0f64, 0.0f64);
    for k in 0..problem.horizon() {
        let stage = problem.prepare(k);
        let dec = ctl.step(problem, &stage, k, soc);
        let rec = match dec.candidate {
            Some(c) => {
                max_ps_snap = max_ps_snap.max((c.flow.ps - dec.command.ps).abs());
                max_ne_snap = max_ne_snap.max((c.ne - dec.ne_command).abs());
                let mut r = problem.record(k, soc, &c)?;
                r.saturated = dec.command.saturated;
                r
            }
            None => saturation_record(problem, &ctl, k, soc)?,
        };
        soc = rec.soc_next;
        records.push(rec);
    }
    Ok(RuleRun {
        trajectory: Trajectory::new("rule", soc0, records),
        max_ps_snap,
        max_ne_snap,
    })
}
