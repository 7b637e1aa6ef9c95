#![allow(dead_code)]

use emt_core::ahp::JudgmentMatrix;
use emt_core::dp::{DecisionProblem, SocGrid, Transition};
use rand::Rng;

/// Principal eigenpair by normalised power iteration: at most 200 steps or
/// until the weights move less than 1e-12.
pub fn power_iteration(m: &JudgmentMatrix) -> (Vec<f64>, f64) {
    let n = m.order();
    let mut w = vec![1.0 / n as f64; n];
    for _ in 0..200 {
        let mut next: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m.get(i, j) * w[j]).sum()).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let delta = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        if delta < 1e-12 {
            break;
        }
    }
    let aw: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m.get(i, j) * w[j]).sum()).collect();
    let lambda = aw.iter().zip(&w).map(|(a, b)| a / b).sum::<f64>() / n as f64;
    (w, lambda)
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Abstract instance whose actions move the state a whole number of grid
/// nodes, so successors always land on nodes.
#[derive(Debug, Clone)]
pub struct SnappedProblem {
    pub grid: SocGrid,
    /// `stages[k][a] = (cost, node shift)`
    pub stages: Vec<Vec<(f64, i64)>>,
}

impl SnappedProblem {
    pub fn random<R: Rng>(rng: &mut R, max_stages: usize, max_nodes: usize, max_actions: usize) -> Self {
        let n_stages = rng.gen_range(1..=max_stages);
        let nodes = rng.gen_range(2..=max_nodes);
        let grid = SocGrid::new(0.3, 0.8, nodes).unwrap();
        let stages = (0..n_stages)
            .map(|_| {
                let n_act = rng.gen_range(1..=max_actions);
                (0..n_act)
                    .map(|_| (rng.gen_range(-2.0..3.0), rng.gen_range(-1i64..=1)))
                    .collect()
            })
            .collect();
        Self { grid, stages }
    }

    fn node_of(&self, soc: f64) -> Option<usize> {
        self.grid.nodes().iter().position(|&s| (s - soc).abs() < 1e-12)
    }
}

impl DecisionProblem for SnappedProblem {
    type Action = usize;
    type Stage = ();

    fn horizon(&self) -> usize {
        self.stages.len()
    }

    fn prepare(&self, _k: usize) {}

    fn for_each_transition<F: FnMut(Transition<usize>)>(&self, _s: &(), k: usize, soc: f64, mut visit: F) {
        let Some(here) = self.node_of(soc) else { return };
        let nodes = self.grid.nodes();
        for (a, &(cost, shift)) in self.stages[k].iter().enumerate() {
            let to = here as i64 + shift;
            if to < 0 || to >= nodes.len() as i64 {
                continue;
            }
            visit(Transition {
                action: a,
                index: a,
                cost,
                next_soc: nodes[to as usize],
                fuel: 0.0,
                abs_ps: 0.0,
            });
        }
    }
}
