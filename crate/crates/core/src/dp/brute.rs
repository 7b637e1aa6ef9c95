use alloc::vec::Vec;

use super::{DecisionProblem, SocGrid, SolverSettings, Transition};
use crate::{Error, Result};

/// Largest number of action sequences the exhaustive reference will walk.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Minimum total cost from `x0` by enumerating every action sequence.
///
/// Intended for node-snapped instances, where successor states are grid
/// nodes and no interpolation is involved. A state with no on-grid
/// transition contributes the infeasible penalty, mirroring
/// [`super::backward_solve`]. Each path cost is accumulated from the last
/// stage backwards.
pub fn brute_force_reference<P: DecisionProblem>(
    problem: &P,
    grid: &SocGrid,
    settings: &SolverSettings,
    x0: f64,
) -> Result<f64> {
    let n = problem.horizon();
    if n == 0 {
        return Err(Error::Empty("decision horizon"));
    }
    let stages: Vec<P::Stage> = (0..n).map(|k| problem.prepare(k)).collect();

    let mut paths = 1.0f64;
    for (k, st) in stages.iter().enumerate() {
        let widest = grid
            .nodes()
            .iter()
            .map(|&s| {
                let mut c = 0usize;
                problem.for_each_transition(st, k, s, |_| c += 1);
                c
            })
            .max()
            .unwrap_or(0)
            .max(1);
        paths *= widest as f64;
    }
    if paths > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            paths,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let mut costs: Vec<f64> = Vec::with_capacity(n);
    let mut best = f64::INFINITY;
    walk(problem, &stages, grid, settings, 0, x0, &mut costs, &mut best);
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn walk<P: DecisionProblem>(
    problem: &P,
    stages: &[P::Stage],
    grid: &SocGrid,
    settings: &SolverSettings,
    k: usize,
    soc: f64,
    costs: &mut Vec<f64>,
    best: &mut f64,
) {
    let finish = |tail: f64, costs: &[f64], best: &mut f64| {
        let total = costs.iter().rev().fold(tail, |acc, c| c + acc);
        if total < *best {
            *best = total;
        }
    };
    if k == stages.len() {
        finish(settings.terminal_cost(soc), costs, best);
        return;
    }
    let mut options: Vec<Transition<P::Action>> = Vec::new();
    problem.for_each_transition(&stages[k], k, soc, |t| {
        if grid.contains(t.next_soc) {
            options.push(t);
        }
    });
    if options.is_empty() {
        finish(settings.infeasible_penalty, costs, best);
        return;
    }
    for t in options {
        costs.push(t.cost);
        walk(problem, stages, grid, settings, k + 1, t.next_soc, costs, best);
        costs.pop();
    }
}
