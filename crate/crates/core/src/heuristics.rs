//! Goal-distance estimates computed over lower-bound action costs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimation::{Cost, EstimatorTable};
use crate::task::{ActionId, GroundTask, State};

/// Per-action cost the heuristic sees: the tier-0 lower bound, frozen when
/// the search starts.
#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicCostView {
    costs: Vec<Cost>,
}

impl HeuristicCostView {
    pub fn cheapest_lower_bounds(estimators: &EstimatorTable) -> Self {
        HeuristicCostView { costs: estimators.cheapest_lower_bounds() }
    }

    pub fn from_costs(costs: Vec<Cost>) -> Self {
        HeuristicCostView { costs }
    }

    pub fn cost(&self, action: ActionId) -> Cost {
        self.costs[action.index()]
    }

    pub fn costs(&self) -> &[Cost] {
        &self.costs
    }
}

pub trait Heuristic {
    /// `∞` marks a state from which no goal state is reachable.
    fn evaluate(&mut self, state: &State) -> Cost;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Blind;

impl Heuristic for Blind {
    fn evaluate(&mut self, _state: &State) -> Cost {
        0.0
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// `h_max` by Dijkstra-style propagation over atoms.
///
/// Atoms are settled in non-decreasing cost order, so when the last
/// precondition of an action is settled its cost is the maximum over the
/// preconditions.
pub struct HMax<'t> {
    task: &'t GroundTask,
    view: Vec<Cost>,
    pre_of: Vec<Vec<u32>>,
    unconditional: Vec<u32>,
    is_goal_atom: Vec<bool>,
    atom_cost: Vec<Cost>,
    unsatisfied: Vec<u32>,
    heap: BinaryHeap<Reverse<(Key, u32)>>,
}

impl<'t> HMax<'t> {
    pub fn new(task: &'t GroundTask, view: &HeuristicCostView) -> Self {
        assert_eq!(view.costs.len(), task.action_count());
        let mut pre_of = vec![Vec::new(); task.atom_count()];
        let mut unconditional = Vec::new();
        for action in task.actions() {
            if action.pre.is_empty() {
                unconditional.push(action.id.0);
            }
            for p in &action.pre {
                pre_of[p.index()].push(action.id.0);
            }
        }
        let mut is_goal_atom = vec![false; task.atom_count()];
        for g in task.goal() {
            is_goal_atom[g.index()] = true;
        }
        HMax {
            task,
            view: view.costs.clone(),
            pre_of,
            unconditional,
            is_goal_atom,
            atom_cost: vec![f64::INFINITY; task.atom_count()],
            unsatisfied: vec![0; task.action_count()],
            heap: BinaryHeap::new(),
        }
    }

    fn relax_effects(&mut self, action: u32, base: Cost) {
        let cost = base + self.view[action as usize];
        for q in &self.task.actions()[action as usize].add {
            let q = q.index();
            if cost < self.atom_cost[q] {
                self.atom_cost[q] = cost;
                self.heap.push(Reverse((Key(cost), q as u32)));
            }
        }
    }
}

impl Heuristic for HMax<'_> {
    fn evaluate(&mut self, state: &State) -> Cost {
        let mut goals_left = self.task.goal().len();
        if goals_left == 0 {
            return 0.0;
        }
        self.atom_cost.fill(f64::INFINITY);
        self.heap.clear();
        for (u, action) in self.unsatisfied.iter_mut().zip(self.task.actions()) {
            *u = action.pre.len() as u32;
        }
        for atom in state.true_atoms() {
            self.atom_cost[atom.index()] = 0.0;
            self.heap.push(Reverse((Key(0.0), atom.0)));
        }
        for i in 0..self.unconditional.len() {
            let a = self.unconditional[i];
            self.relax_effects(a, 0.0);
        }
        while let Some(Reverse((Key(cost), atom))) = self.heap.pop() {
            let p = atom as usize;
            if cost > self.atom_cost[p] {
                continue;
            }
            if self.is_goal_atom[p] {
                goals_left -= 1;
                if goals_left == 0 {
                    return cost;
                }
            }
            for i in 0..self.pre_of[p].len() {
                let a = self.pre_of[p][i];
                let u = &mut self.unsatisfied[a as usize];
                *u -= 1;
                if *u == 0 {
                    self.relax_effects(a, cost);
                }
            }
        }
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicKind {
    Blind,
    #[serde(rename = "hmax")]
    HMax,
}

impl HeuristicKind {
    pub fn build<'t>(self, task: &'t GroundTask, view: &HeuristicCostView) -> Box<dyn Heuristic + 't> {
        match self {
            HeuristicKind::Blind => Box::new(Blind),
            HeuristicKind::HMax => Box::new(HMax::new(task, view)),
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeuristicKind::Blind => "blind",
            HeuristicKind::HMax => "hmax",
        })
    }
}

impl FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "blind" => Ok(HeuristicKind::Blind),
            "hmax" | "h_max" | "h-max" => Ok(HeuristicKind::HMax),
            other => Err(format!("unknown heuristic `{other}` (expected blind or hmax)")),
        }
    }
}
