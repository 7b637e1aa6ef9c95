//! The EMT energy-management problem as a [`DecisionProblem`].
//!
//! A decision is `(ne, Ta, Tb)`. Engine speed and machine A torque come from
//! fixed grids. Machine B torque is resolved per `(ne, Ta)` so that the
//! battery power lands on one of a fixed set of levels. The battery is the
//! slack of the electric balance and the engine is the slack of the drive
//! balance, so every grid point either closes both balances or is rejected.
//! Parameterising `Tb` by battery power keeps `Ps = 0` on the grid exactly.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cycle::{DriveCycle, StageDemand};
use crate::dp::{backward_solve, rollout, DecisionProblem, PathStep, Policy, SocGrid, SolverSettings, Transition, ValueTable};
use crate::interp::Axis;
use crate::objectives::{composite, ObjectiveInputs, ObjectiveParams, ObjectiveValues, PatternWeights};
use crate::patterns::DrivingPattern;
use crate::powertrain::{machine_bus_power, power_balance_residuals, rpm_to_rad_s, PowerFlow, PowertrainModel};
use crate::trajectory::{StageRecord, Trajectory};
use crate::{Error, Result};

/// Fixed-point iterations allowed when solving machine B torque.
const TB_ITERATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpConfig {
    pub soc_nodes: usize,
    /// Engine speeds spanning the engine map's speed grid.
    pub ne_count: usize,
    /// Machine A torques spanning its torque grid.
    pub ta_count: usize,
    /// Battery power levels in `[-ps_level_max, ps_level_max]`; each fixes
    /// machine B torque.
    pub tb_count: usize,
    /// kW
    pub ps_level_max: f64,
    /// kW
    pub balance_tol: f64,
    pub infeasible_penalty: f64,
    pub terminal_soc_penalty: f64,
    pub interpolation: Interpolation,
    /// When false, battery power is pinned to zero.
    pub battery_enabled: bool,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            soc_nodes: 101,
            ne_count: 10,
            ta_count: 7,
            tb_count: 7,
            ps_level_max: 150.0,
            balance_tol: 1e-6,
            infeasible_penalty: 1e6,
            terminal_soc_penalty: 0.0,
            interpolation: Interpolation::Linear,
            battery_enabled: true,
        }
    }
}

impl DpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.soc_nodes < 2 || self.ne_count < 2 || self.ta_count < 2 || self.tb_count < 2 {
            return Err(Error::Config("dp grid counts must all be at least 2".into()));
        }
        if !(self.ps_level_max > 0.0) {
            return Err(Error::Config("dp.ps_level_max must be positive".into()));
        }
        if !(self.balance_tol > 0.0) {
            return Err(Error::Config("dp.balance_tol must be positive".into()));
        }
        if !(self.infeasible_penalty > 0.0 && self.infeasible_penalty.is_finite()) {
            return Err(Error::Config("dp.infeasible_penalty must be positive and finite".into()));
        }
        if !(self.terminal_soc_penalty >= 0.0) {
            return Err(Error::Config("dp.terminal_soc_penalty must be non-negative".into()));
        }
        Ok(())
    }

    pub fn settings(&self, soc_ref: f64) -> SolverSettings {
        SolverSettings {
            infeasible_penalty: self.infeasible_penalty,
            terminal_weight: self.terminal_soc_penalty,
            terminal_reference: soc_ref,
        }
    }
}

/// Index of a decision in the action grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EmtAction {
    pub ne: u16,
    pub ta: u16,
    pub level: u16,
}

/// Engine speeds, machine A torques and battery power levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionGrid {
    pub ne: Vec<f64>,
    pub ta: Vec<f64>,
    pub ps_levels: Vec<f64>,
}

impl ActionGrid {
    pub fn new(ne: Vec<f64>, ta: Vec<f64>, ps_levels: Vec<f64>) -> Result<Self> {
        for (name, v) in [("ne", &ne), ("ta", &ta), ("ps_levels", &ps_levels)] {
            if v.is_empty() || v.len() > u16::MAX as usize {
                return Err(Error::Config(alloc::format!("action grid {name} has bad length {}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(alloc::format!("action grid {name} has a non-finite value")));
            }
        }
        Ok(Self { ne, ta, ps_levels })
    }

    /// Uniform grids spanning the engine speed map and the machine A torque
    /// map.
    pub fn from_config(model: &PowertrainModel, cfg: &DpConfig) -> Result<Self> {
        let es = model.engine.speed_grid();
        let ts = model.machine_a.torque_grid();
        let ne = Axis::linspace(es.first(), es.last(), cfg.ne_count)?.points().to_vec();
        let ta = Axis::linspace(ts.first(), ts.last(), cfg.ta_count)?.points().to_vec();
        let ps_levels = if cfg.battery_enabled {
            Axis::linspace(-cfg.ps_level_max, cfg.ps_level_max, cfg.tb_count)?.points().to_vec()
        } else {
            alloc::vec![0.0]
        };
        Self::new(ne, ta, ps_levels)
    }

    pub fn len(&self) -> usize {
        self.ne.len() * self.ta.len() * self.ps_levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, a: EmtAction) -> usize {
        (a.ne as usize * self.ta.len() + a.ta as usize) * self.ps_levels.len() + a.level as usize
    }

    pub fn action(&self, index: usize) -> EmtAction {
        let nl = self.ps_levels.len();
        let nt = self.ta.len();
        EmtAction {
            ne: (index / (nl * nt)) as u16,
            ta: (index / nl % nt) as u16,
            level: (index % nl) as u16,
        }
    }

    pub fn values(&self, a: EmtAction) -> (f64, f64, f64) {
        (self.ne[a.ne as usize], self.ta[a.ta as usize], self.ps_levels[a.level as usize])
    }
}

/// A decision with every quantity derived from it for one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCandidate {
    pub action: EmtAction,
    /// rpm
    pub ne: f64,
    /// N·m
    pub te: f64,
    pub ta: f64,
    pub tb: f64,
    /// Machine speeds, rpm.
    pub na: f64,
    pub nb: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub flow: PowerFlow,
    /// Power taken by the service brakes, kW (non-negative).
    pub brake: f64,
    /// g/s
    pub fuel: f64,
    pub dsoc: f64,
    /// Component capacities at this operating point, kW.
    pub pe_max: f64,
    pub pa_max: f64,
    pub pb_max: f64,
}

/// Close the power flow of decision `(ne, ta, tb)` for one stage.
///
/// Battery power is the slack of the electric balance, engine power the
/// slack of the drive balance. A negative engine power during braking is
/// handed to the service brakes. All component limits except the
/// SOC-dependent discharge limit are checked.
pub fn close_flow(model: &PowertrainModel, d: &StageDemand, ne: f64, ta: f64, tb: f64) -> Result<ActionCandidate> {
    let veh = &model.vehicle;
    let n_out = veh.output_speed(d.v);
    let (na, nb) = veh.machine_speeds(ne, n_out);
    let eta_a = model.machine_a.efficiency(na, ta)?;
    let eta_b = model.machine_b.efficiency(nb, tb)?;
    let pa = ta * rpm_to_rad_s(na) / 1000.0;
    let pb = tb * rpm_to_rad_s(nb) / 1000.0;
    let pa_max = model.machine_a.max_power(ta)?;
    let pb_max = model.machine_b.max_power(tb)?;
    if pa.abs() > pa_max || pb.abs() > pb_max {
        return Err(Error::InfeasiblePower { power_kw: if pa.abs() > pa_max { pa } else { pb } });
    }

    let k = veh.elec_loss_frac;
    let x = d.pc + k * (pa.abs() + pb.abs()) + machine_bus_power(pa, eta_a) + machine_bus_power(pb, eta_b);
    let ps = if -x >= 0.0 { -x / (1.0 + k) } else { -x / (1.0 - k) };
    let pl = k * (pa.abs() + pb.abs() + ps.abs());
    let bat = &model.battery;
    if ps > bat.max_charge() || -ps > bat.p_abs_max {
        return Err(Error::InfeasiblePower { power_kw: ps });
    }

    let eta_e = veh.mech_path_eff;
    let ploss = veh.proc_loss_frac * d.pd.abs();
    let mut pd = d.pd;
    let mut pe = (pd + d.pc + ploss + ps) / eta_e;
    let mut brake = 0.0;
    if pe < 0.0 {
        if d.pd >= 0.0 {
            return Err(Error::InfeasiblePower { power_kw: pe });
        }
        // surplus braking power goes to the service brakes
        let pd_eff = -(d.pc + ploss + ps);
        if pd_eff > 0.0 {
            return Err(Error::InfeasiblePower { power_kw: pe });
        }
        brake = pd_eff - pd;
        pd = pd_eff;
        pe = 0.0;
    }
    let we = rpm_to_rad_s(ne);
    let te = if pe == 0.0 { 0.0 } else { pe * 1000.0 / we };
    let fuel = model.engine.fuel_rate(ne, te)?;
    let dsoc = bat.soc_step(ps, d.dt)?;

    let flow = PowerFlow {
        ps,
        pc: d.pc,
        pl,
        pa,
        pb,
        pe,
        pd,
        ploss,
    };
    Ok(ActionCandidate {
        action: EmtAction { ne: 0, ta: 0, level: 0 },
        ne,
        te,
        ta,
        tb,
        na,
        nb,
        eta_a,
        eta_b,
        flow,
        brake,
        fuel,
        dsoc,
        pe_max: model.engine.max_power(ne)?,
        pa_max,
        pb_max,
    })
}

/// Machine B torque that makes the battery power equal `ps_target` for the
/// given engine speed and machine A torque.
///
/// The electric balance fixes `Pb·ηb^(−sgn Pb) + k·|Pb|`; the efficiency
/// depends on `Tb`, so this iterates on `ηb` until `Tb` settles.
pub fn solve_tb(model: &PowertrainModel, d: &StageDemand, ne: f64, ta: f64, ps_target: f64) -> Result<f64> {
    let veh = &model.vehicle;
    let (na, nb) = veh.machine_speeds(ne, veh.output_speed(d.v));
    let eta_a = model.machine_a.efficiency(na, ta)?;
    let pa = ta * rpm_to_rad_s(na) / 1000.0;
    let k = veh.elec_loss_frac;
    let r = -(ps_target + d.pc + k * (pa.abs() + ps_target.abs()) + machine_bus_power(pa, eta_a));
    if r == 0.0 {
        return Ok(0.0);
    }
    let wb = rpm_to_rad_s(nb);
    if !(wb > 0.0) {
        return Err(Error::InfeasiblePower { power_kw: r });
    }
    let mut tb = 0.0;
    for _ in 0..TB_ITERATIONS {
        let eta = model.machine_b.efficiency(nb, tb)?;
        let pb = if r > 0.0 { r / (1.0 / eta + k) } else { r / (eta - k) };
        let next = pb * 1000.0 / wb;
        let settled = (next - tb).abs() <= 1e-12 * (1.0 + next.abs());
        tb = next;
        if settled {
            return Ok(tb);
        }
    }
    model.machine_b.efficiency(nb, tb)?;
    Ok(tb)
}

/// SOC-independent data of one stage.
#[derive(Debug, Clone)]
pub struct EmtStage {
    pub demand: StageDemand,
    pub weights: PatternWeights,
    /// Indexed by flat action index; `None` where the decision is infeasible.
    pub candidates: Vec<Option<ActionCandidate>>,
}

impl EmtStage {
    pub fn candidate(&self, index: usize) -> Option<&ActionCandidate> {
        self.candidates.get(index).and_then(|c| c.as_ref())
    }

    pub fn feasible_count(&self) -> usize {
        self.candidates.iter().filter(|c| c.is_some()).count()
    }
}

/// Objective weights per driving pattern, indexed by
/// [`DrivingPattern::index`].
pub type WeightSet = [PatternWeights; 3];

#[derive(Debug, Clone)]
pub struct EmtProblem {
    pub model: PowertrainModel,
    pub demands: Vec<StageDemand>,
    pub weights: WeightSet,
    pub params: ObjectiveParams,
    pub cfg: DpConfig,
    pub grid: ActionGrid,
}

impl EmtProblem {
    pub fn new(model: PowertrainModel, cycle: &DriveCycle, weights: WeightSet, params: ObjectiveParams, cfg: DpConfig) -> Result<Self> {
        let grid = ActionGrid::from_config(&model, &cfg)?;
        Self::with_grid(model, cycle, weights, params, cfg, grid)
    }

    pub fn with_grid(
        model: PowertrainModel,
        cycle: &DriveCycle,
        weights: WeightSet,
        params: ObjectiveParams,
        cfg: DpConfig,
        grid: ActionGrid,
    ) -> Result<Self> {
        model.validate()?;
        params.validate()?;
        cfg.validate()?;
        for w in &weights {
            w.validate()?;
        }
        if cycle.is_empty() {
            return Err(Error::Empty("drive cycle"));
        }
        let demands = cycle.stage_demands(&model.vehicle)?;
        Ok(Self {
            model,
            demands,
            weights,
            params,
            cfg,
            grid,
        })
    }

    pub fn soc_grid(&self) -> Result<SocGrid> {
        SocGrid::new(self.model.battery.soc_min, self.model.battery.soc_max, self.cfg.soc_nodes)
    }

    pub fn settings(&self) -> SolverSettings {
        self.cfg.settings(self.params.soc0)
    }

    pub fn weights_for(&self, pattern: DrivingPattern) -> PatternWeights {
        self.weights[pattern.index()]
    }

    /// Candidate for one grid decision at stage `k`, before SOC checks.
    pub fn candidate(&self, k: usize, a: EmtAction) -> Result<ActionCandidate> {
        let d = &self.demands[k];
        let (ne, ta, ps_target) = self.grid.values(a);
        let tb = solve_tb(&self.model, d, ne, ta, ps_target)?;
        let mut c = close_flow(&self.model, d, ne, ta, tb)?;
        if (c.flow.ps - ps_target).abs() > self.cfg.balance_tol {
            return Err(Error::InfeasiblePower { power_kw: c.flow.ps });
        }
        let (e, r) = power_balance_residuals(&c.flow, c.eta_a, c.eta_b, self.model.vehicle.mech_path_eff);
        if e.abs() > self.cfg.balance_tol || r.abs() > self.cfg.balance_tol {
            return Err(Error::InfeasiblePower { power_kw: e.abs().max(r.abs()) });
        }
        c.action = a;
        Ok(c)
    }

    /// SOC-dependent feasibility: discharge limit and successor range.
    pub fn admissible(&self, c: &ActionCandidate, soc: f64) -> bool {
        let bat = &self.model.battery;
        if c.flow.ps < 0.0 && -c.flow.ps > bat.max_discharge(soc) {
            return false;
        }
        let next = soc + c.dsoc;
        next >= bat.soc_min && next <= bat.soc_max
    }

    pub fn objective_values(&self, c: &ActionCandidate, k: usize, soc: f64) -> Result<ObjectiveValues> {
        let d = &self.demands[k];
        ObjectiveValues::evaluate(
            &ObjectiveInputs {
                fuel: c.fuel,
                dsoc: c.dsoc,
                soc,
                pe_max: c.pe_max,
                ps_max: self.model.battery.max_discharge(soc),
                pd: d.pd,
                pa_max: c.pa_max,
                pb_max: c.pb_max,
                pc: d.pc,
            },
            &self.params,
        )
    }

    /// Weighted composite of the normalised objectives with the weights of
    /// the stage's own driving pattern.
    pub fn stage_cost(&self, c: &ActionCandidate, k: usize, soc: f64) -> Result<f64> {
        let w = self.weights_for(self.demands[k].pattern);
        Ok(composite(&w, &self.objective_values(c, k, soc)?))
    }

    /// Feasible candidates at stage `k` and `soc`, in action index order.
    pub fn enumerate_actions(&self, k: usize, soc: f64) -> Vec<ActionCandidate> {
        let stage = self.prepare(k);
        stage
            .candidates
            .iter()
            .flatten()
            .filter(|c| self.admissible(c, soc) && self.stage_cost(c, k, soc).is_ok())
            .copied()
            .collect()
    }

    pub fn record(&self, k: usize, soc: f64, c: &ActionCandidate) -> Result<StageRecord> {
        let d = &self.demands[k];
        let v = self.objective_values(c, k, soc)?;
        let w = self.weights_for(d.pattern);
        Ok(StageRecord {
            t: d.t,
            v: d.v,
            pattern: d.pattern,
            dt: d.dt,
            soc,
            soc_next: soc + c.dsoc,
            ne: c.ne,
            te: c.te,
            ta: c.ta,
            tb: c.tb,
            ps: c.flow.ps,
            pa: c.flow.pa,
            pb: c.flow.pb,
            pe: c.flow.pe,
            pd: d.pd,
            pc: d.pc,
            fuel: c.fuel,
            j1_bar: v.j1_bar,
            j2_bar: v.j2_bar,
            j3_bar: v.j3_bar,
            cost: composite(&w, &v),
            saturated: false,
        })
    }
}

impl DecisionProblem for EmtProblem {
    type Action = EmtAction;
    type Stage = EmtStage;

    fn horizon(&self) -> usize {
        self.demands.len()
    }

    fn prepare(&self, k: usize) -> EmtStage {
        let candidates = (0..self.grid.len())
            .map(|i| self.candidate(k, self.grid.action(i)).ok())
            .collect();
        EmtStage {
            demand: self.demands[k],
            weights: self.weights_for(self.demands[k].pattern),
            candidates,
        }
    }

    fn for_each_transition<F: FnMut(Transition<EmtAction>)>(&self, stage: &EmtStage, k: usize, soc: f64, mut visit: F) {
        for (index, c) in stage.candidates.iter().enumerate() {
            let Some(c) = c else { continue };
            if !self.admissible(c, soc) {
                continue;
            }
            let Ok(v) = self.objective_values(c, k, soc) else {
                continue;
            };
            visit(Transition {
                action: c.action,
                index,
                cost: composite(&stage.weights, &v),
                next_soc: soc + c.dsoc,
                fuel: c.fuel,
                abs_ps: c.flow.ps.abs(),
            });
        }
    }
}

/// Backward solve over the battery's SOC range.
pub fn solve(problem: &EmtProblem) -> Result<(ValueTable, Policy<EmtAction>)> {
    let grid = problem.soc_grid()?;
    backward_solve(problem, &grid, &problem.settings())
}

/// Records of a forward pass.
pub fn trajectory_from_path(problem: &EmtProblem, path: &[PathStep<EmtAction>], strategy: &str, soc0: f64) -> Result<Trajectory> {
    let mut records = Vec::with_capacity(path.len());
    for step in path {
        let c = problem.candidate(step.stage, step.transition.action)?;
        records.push(problem.record(step.stage, step.soc, &c)?);
    }
    Ok(Trajectory::new(strategy, soc0, records))
}

/// Optimal forward pass from `x0`.
pub fn rollout_trajectory(problem: &EmtProblem, table: &ValueTable, x0: f64) -> Result<Trajectory> {
    let path = rollout(problem, table, x0)?;
    trajectory_from_path(problem, &path, "dp", x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::CycleRecord;
    use crate::objectives::PatternWeights;
    use alloc::vec;

    fn demand(v: f64, pd: f64, pc: f64) -> StageDemand {
        StageDemand {
            t: 0.0,
            v,
            f: 0.0,
            pc,
            pd,
            dt: 1.0,
            pattern: crate::patterns::classify_speed(v).unwrap(),
        }
    }

    #[test]
    fn closure_balances_both_equations() {
        let m = PowertrainModel::synthetic();
        let d = demand(40.0, 120.0, 15.0);
        for &(ne, ta, tb) in &[(1200.0, 300.0, -200.0), (1800.0, -300.0, 300.0), (1000.0, 0.0, 0.0)] {
            let c = close_flow(&m, &d, ne, ta, tb).unwrap();
            let (e, r) = power_balance_residuals(&c.flow, c.eta_a, c.eta_b, m.vehicle.mech_path_eff);
            assert!(e.abs() < 1e-9 && r.abs() < 1e-9, "{e} {r}");
        }
    }

    #[test]
    fn tb_hits_level() {
        let m = PowertrainModel::synthetic();
        let d = demand(50.0, 150.0, 20.0);
        for &ps in &[-100.0, -50.0, 0.0, 50.0, 100.0] {
            let tb = solve_tb(&m, &d, 1400.0, 0.0, ps).unwrap();
            let c = close_flow(&m, &d, 1400.0, 0.0, tb).unwrap();
            assert!((c.flow.ps - ps).abs() < 1e-6, "{ps} {}", c.flow.ps);
        }
    }

    #[test]
    fn braking_surplus_goes_to_brakes() {
        let m = PowertrainModel::synthetic();
        let d = demand(30.0, -300.0, 5.0);
        let tb = solve_tb(&m, &d, 800.0, 0.0, 50.0).unwrap();
        let c = close_flow(&m, &d, 800.0, 0.0, tb).unwrap();
        assert_eq!(c.flow.pe, 0.0);
        assert!(c.brake > 0.0);
        let (_, r) = power_balance_residuals(&c.flow, c.eta_a, c.eta_b, m.vehicle.mech_path_eff);
        assert!(r.abs() < 1e-9);
    }

    #[test]
    fn flat_index_round_trip() {
        let m = PowertrainModel::synthetic();
        let g = ActionGrid::from_config(&m, &DpConfig::default()).unwrap();
        assert_eq!(g.len(), 490);
        for i in 0..g.len() {
            assert_eq!(g.flat_index(g.action(i)), i);
        }
        assert!(g.ps_levels.contains(&0.0));
    }

    fn one_stage(v: f64, pc: f64) -> EmtProblem {
        let cycle = DriveCycle::new(vec![CycleRecord { t: 0.0, v, f: 0.0, pc }], true).unwrap();
        let w = PatternWeights::new(1.0, 0.0, 0.0).unwrap();
        EmtProblem::new(PowertrainModel::synthetic(), &cycle, [w; 3], ObjectiveParams::default(), DpConfig::default()).unwrap()
    }

    #[test]
    fn idle_candidate_exists() {
        let p = one_stage(0.0, 0.0);
        let acts = p.enumerate_actions(0, 0.5);
        assert!(acts.iter().any(|c| c.flow.ps.abs() < 1e-9));
    }

    #[test]
    fn zero_fuel_cost_is_zero() {
        let p = one_stage(0.0, 0.0);
        let mut c = p.enumerate_actions(0, 0.5)[0];
        c.fuel = 0.0;
        c.dsoc = 0.0;
        assert_eq!(p.stage_cost(&c, 0, 0.5).unwrap(), 0.0);
    }
}
