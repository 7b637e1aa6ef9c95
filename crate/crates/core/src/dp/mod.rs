//! Backward dynamic programming over a one-dimensional SOC grid.
//!
//! The solver is generic over a [`DecisionProblem`]: anything that can list,
//! for a stage and an (exact, possibly off-grid) SOC, the feasible
//! transitions with their stage cost and successor SOC. Cost-to-go is
//! interpolated linearly between grid nodes and never extrapolated.

mod brute;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use brute::{brute_force_reference, BRUTE_FORCE_LIMIT};

use crate::interp::{lerp, Axis};
use crate::{Error, Result};

/// Uniform SOC discretisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocGrid {
    axis: Axis,
}

impl SocGrid {
    pub fn new(soc_min: f64, soc_max: f64, count: usize) -> Result<Self> {
        if !(soc_min < soc_max) {
            return Err(Error::Config("SOC grid needs soc_min < soc_max".into()));
        }
        Ok(Self {
            axis: Axis::linspace(soc_min, soc_max, count)?,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        self.axis.points()
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> f64 {
        self.axis.first()
    }

    pub fn max(&self) -> f64 {
        self.axis.last()
    }

    pub fn contains(&self, soc: f64) -> bool {
        self.axis.contains(soc)
    }

    /// Linear interpolation of node `values` at `soc`; `None` outside the grid.
    #[inline]
    pub fn interp(&self, values: &[f64], soc: f64) -> Option<f64> {
        let (i, t) = self.axis.locate(soc)?;
        Some(lerp(values[i], values[i + 1], t))
    }
}

/// One feasible decision from a given state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<A> {
    pub action: A,
    /// Position in the problem's fixed action enumeration order.
    pub index: usize,
    pub cost: f64,
    pub next_soc: f64,
    /// Tie-break keys: lower fuel first, then lower battery power magnitude.
    pub fuel: f64,
    pub abs_ps: f64,
}

pub trait DecisionProblem: Sync {
    type Action: Copy + Send + Sync + PartialEq + core::fmt::Debug;
    /// SOC-independent per-stage data, built once per stage.
    type Stage: Send + Sync;

    /// Number of stages `N`.
    fn horizon(&self) -> usize;

    fn prepare(&self, k: usize) -> Self::Stage;

    /// Visit every feasible transition from `soc` at stage `k`, in ascending
    /// `index` order.
    fn for_each_transition<F: FnMut(Transition<Self::Action>)>(
        &self,
        stage: &Self::Stage,
        k: usize,
        soc: f64,
        visit: F,
    );
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Value assigned to states without any feasible action.
    pub infeasible_penalty: f64,
    /// Terminal cost `weight · (soc − reference)²`.
    pub terminal_weight: f64,
    pub terminal_reference: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            infeasible_penalty: 1e6,
            terminal_weight: 0.0,
            terminal_reference: 0.5,
        }
    }
}

impl SolverSettings {
    pub fn terminal_cost(&self, soc: f64) -> f64 {
        let d = soc - self.terminal_reference;
        self.terminal_weight * d * d
    }
}

/// Cost-to-go `V[k][node]` for `k = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    grid: SocGrid,
    stages: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn grid(&self) -> &SocGrid {
        &self.grid
    }

    /// Number of decision stages `N` (the table holds `N + 1` rows).
    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn value(&self, k: usize, node: usize) -> f64 {
        self.row(k)[node]
    }

    /// Interpolated cost-to-go at stage `k`.
    pub fn interp(&self, k: usize, soc: f64) -> Option<f64> {
        self.grid.interp(self.row(k), soc)
    }
}

/// Argmin action per `(stage, node)`; `None` marks states without a
/// feasible action.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy<A> {
    nodes: usize,
    entries: Vec<Option<A>>,
}

impl<A: Copy> Policy<A> {
    pub fn action(&self, k: usize, node: usize) -> Option<A> {
        self.entries[k * self.nodes + node]
    }

    pub fn stages(&self) -> usize {
        self.entries.len().checked_div(self.nodes).unwrap_or(0)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn infeasible_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_none()).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Best<A> {
    total: f64,
    t: Transition<A>,
}

#[inline]
fn better<A>(total: f64, t: &Transition<A>, best: &Best<A>) -> bool {
    if total != best.total {
        return total < best.total;
    }
    if t.fuel != best.t.fuel {
        return t.fuel < best.t.fuel;
    }
    if t.abs_ps != best.t.abs_ps {
        return t.abs_ps < best.t.abs_ps;
    }
    t.index < best.t.index
}

/// Minimise `cost + V_next(next_soc)` over the feasible transitions.
fn best_transition<P: DecisionProblem>(
    problem: &P,
    stage: &P::Stage,
    k: usize,
    soc: f64,
    grid: &SocGrid,
    next_row: &[f64],
) -> Option<Best<P::Action>> {
    let mut best: Option<Best<P::Action>> = None;
    problem.for_each_transition(stage, k, soc, |t| {
        let Some(v_next) = grid.interp(next_row, t.next_soc) else {
            return;
        };
        let total = t.cost + v_next;
        match &best {
            Some(b) if !better(total, &t, b) => {}
            _ => best = Some(Best { total, t }),
        }
    });
    best
}

fn solve_row<P: DecisionProblem>(
    problem: &P,
    stage: &P::Stage,
    k: usize,
    grid: &SocGrid,
    next_row: &[f64],
    penalty: f64,
) -> Vec<(f64, Option<P::Action>)> {
    let eval = |soc: f64| match best_transition(problem, stage, k, soc, grid, next_row) {
        Some(b) => (b.total, Some(b.t.action)),
        None => (penalty, None),
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.nodes().par_iter().map(|&s| eval(s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.nodes().iter().map(|&s| eval(s)).collect()
    }
}

/// Backward recursion `V[k](x) = min_a { r(x, a) + V[k+1](x') }` from the
/// terminal row down to stage 0.
///
/// Within a stage, nodes are independent and are evaluated in parallel when
/// the `parallel` feature is enabled; results do not depend on evaluation
/// order.
pub fn backward_solve<P: DecisionProblem>(
    problem: &P,
    grid: &SocGrid,
    settings: &SolverSettings,
) -> Result<(ValueTable, Policy<P::Action>)> {
    let n_stages = problem.horizon();
    if n_stages == 0 {
        return Err(Error::Empty("decision horizon"));
    }
    if !(settings.infeasible_penalty > 0.0 && settings.infeasible_penalty.is_finite()) {
        return Err(Error::Config("infeasible penalty must be positive and finite".into()));
    }
    let nodes = grid.len();
    let mut values = vec![0.0; (n_stages + 1) * nodes];
    let mut entries = vec![None; n_stages * nodes];

    for (v, &s) in values[n_stages * nodes..].iter_mut().zip(grid.nodes()) {
        *v = settings.terminal_cost(s);
    }

    for k in (0..n_stages).rev() {
        let stage = problem.prepare(k);
        let (head, tail) = values.split_at_mut((k + 1) * nodes);
        let next_row = &tail[..nodes];
        let row = solve_row(problem, &stage, k, grid, next_row, settings.infeasible_penalty);
        for (node, (v, a)) in row.into_iter().enumerate() {
            head[k * nodes + node] = v;
            entries[k * nodes + node] = a;
        }
    }

    Ok((
        ValueTable {
            grid: grid.clone(),
            stages: n_stages,
            values,
        },
        Policy { nodes, entries },
    ))
}

/// One applied decision of a forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStep<A> {
    pub stage: usize,
    pub soc: f64,
    pub transition: Transition<A>,
}

/// Forward pass choosing, at each stage, the transition index returned by
/// `choose` among the feasible transitions whose successor lies on the grid
/// and has a cost-to-go below the infeasible penalty (when any exist;
/// otherwise among all on-grid successors).
pub fn rollout_with<P, F>(problem: &P, table: &ValueTable, penalty: f64, x0: f64, mut choose: F) -> Result<Vec<PathStep<P::Action>>>
where
    P: DecisionProblem,
    F: FnMut(usize, f64, &[(f64, Transition<P::Action>)]) -> usize,
{
    let grid = table.grid();
    if !grid.contains(x0) {
        return Err(Error::Config(alloc::format!("initial SOC {x0} outside grid")));
    }
    let mut soc = x0;
    let mut path = Vec::with_capacity(problem.horizon());
    let mut options: Vec<(f64, Transition<P::Action>)> = Vec::new();
    for k in 0..problem.horizon() {
        let stage = problem.prepare(k);
        options.clear();
        let next_row = table.row(k + 1);
        problem.for_each_transition(&stage, k, soc, |t| {
            if let Some(v) = grid.interp(next_row, t.next_soc) {
                options.push((t.cost + v, t));
            }
        });
        if options.iter().any(|(_, t)| grid.interp(next_row, t.next_soc).unwrap_or(penalty) < penalty) {
            options.retain(|(_, t)| grid.interp(next_row, t.next_soc).unwrap_or(penalty) < penalty);
        }
        if options.is_empty() {
            return Err(Error::DeadEnd { stage: k, soc });
        }
        let pick = choose(k, soc, &options);
        let t = options[pick.min(options.len() - 1)].1;
        path.push(PathStep {
            stage: k,
            soc,
            transition: t,
        });
        soc = t.next_soc;
    }
    Ok(path)
}

/// Forward pass re-minimising `cost + V[k+1]` at the exact current SOC.
pub fn rollout<P: DecisionProblem>(problem: &P, table: &ValueTable, x0: f64) -> Result<Vec<PathStep<P::Action>>> {
    let grid = table.grid();
    if !grid.contains(x0) {
        return Err(Error::Config(alloc::format!("initial SOC {x0} outside grid")));
    }
    let mut soc = x0;
    let mut path = Vec::with_capacity(problem.horizon());
    for k in 0..problem.horizon() {
        let stage = problem.prepare(k);
        let best = best_transition(problem, &stage, k, soc, grid, table.row(k + 1))
            .ok_or(Error::DeadEnd { stage: k, soc })?;
        path.push(PathStep {
            stage: k,
            soc,
            transition: best.t,
        });
        soc = best.t.next_soc;
    }
    Ok(path)
}

/// Total stage cost of a path.
pub fn path_cost<A>(path: &[PathStep<A>]) -> f64 {
    path.iter().map(|s| s.transition.cost).sum()
}

/// Largest `|V[k][node] − min_a(r + V[k+1])|` over all interior entries,
/// recomputed independently of the stored policy.
pub fn max_bellman_residual<P: DecisionProblem>(problem: &P, table: &ValueTable, settings: &SolverSettings) -> f64 {
    let grid = table.grid();
    let mut worst = 0.0f64;
    for k in 0..table.stages() {
        let stage = problem.prepare(k);
        let next_row = table.row(k + 1);
        for (node, &soc) in grid.nodes().iter().enumerate() {
            let mut min_total = f64::INFINITY;
            problem.for_each_transition(&stage, k, soc, |t| {
                if let Some(v) = grid.interp(next_row, t.next_soc) {
                    min_total = min_total.min(t.cost + v);
                }
            });
            if !min_total.is_finite() {
                min_total = settings.infeasible_penalty;
            }
            worst = worst.max((table.value(k, node) - min_total).abs());
        }
    }
    worst
}


#[cfg(test)]
mod tests {
    use super::testing::TableProblem;
    use super::*;

    fn grid4() -> SocGrid {
        SocGrid::new(0.3, 0.6, 4).unwrap()
    }

    #[test]
    fn single_stage_single_action() {
        let p = TableProblem {
            grid: grid4(),
            stages: vec![vec![(2.5, 0)]],
        };
        let (v, pol) = backward_solve(&p, &p.grid, &SolverSettings::default()).unwrap();
        assert!(v.row(0).iter().all(|&x| x == 2.5));
        assert!(v.row(1).iter().all(|&x| x == 0.0));
        assert_eq!(pol.action(0, 2), Some(0));
        let path = rollout(&p, &v, 0.4).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path_cost(&path), 2.5);
    }

    #[test]
    fn separable_two_stage() {
        let p = TableProblem {
            grid: grid4(),
            stages: vec![vec![(1.0, 0), (2.0, 0)], vec![(3.0, 0), (0.0, 0)]],
        };
        let (v, pol) = backward_solve(&p, &p.grid, &SolverSettings::default()).unwrap();
        assert_eq!(v.value(0, 1), 1.0);
        assert_eq!(pol.action(0, 1), Some(0));
        assert_eq!(pol.action(1, 1), Some(1));
    }

    #[test]
    fn dead_end_gets_penalty() {
        // only upward moves, so the top node is a dead end
        let p = TableProblem {
            grid: grid4(),
            stages: vec![vec![(1.0, 1)]],
        };
        let s = SolverSettings::default();
        let (v, pol) = backward_solve(&p, &p.grid, &s).unwrap();
        assert_eq!(v.value(0, 3), s.infeasible_penalty);
        assert_eq!(pol.action(0, 3), None);
        assert_eq!(pol.infeasible_count(), 1);
        assert!(matches!(rollout(&p, &v, 0.6), Err(Error::DeadEnd { stage: 0, .. })));
        assert_eq!(max_bellman_residual(&p, &v, &s), 0.0);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let p = TableProblem {
            grid: grid4(),
            stages: vec![vec![(1.0, 0), (1.0, 0), (1.0, 1)]],
        };
        let (_, pol) = backward_solve(&p, &p.grid, &SolverSettings::default()).unwrap();
        assert_eq!(pol.action(0, 0), Some(0));
    }

    #[test]
    fn terminal_cost_applied() {
        let p = TableProblem {
            grid: grid4(),
            stages: vec![vec![(0.0, 0), (0.0, 1), (0.0, -1)]],
        };
        let s = SolverSettings {
            terminal_weight: 100.0,
            terminal_reference: 0.5,
            ..Default::default()
        };
        let (v, pol) = backward_solve(&p, &p.grid, &s).unwrap();
        // from 0.4 the best move is up one node to 0.5
        assert_eq!(pol.action(0, 1), Some(1));
        assert!(v.value(0, 1).abs() < 1e-12);
    }

    #[test]
    fn empty_horizon_rejected() {
        let p = TableProblem {
            grid: grid4(),
            stages: vec![],
        };
        assert!(backward_solve(&p, &p.grid, &SolverSettings::default()).is_err());
    }
}
