//! Ground truth for validation runs: exact optimal costs by uniform-cost
//! search over the true action costs.
//!
//! None of this is visible to the planners; it exists so tests and the
//! benchmark harness can check what the planners claim.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::estimation::{Cost, EstimatorTable, RELATIVE_TOLERANCE};
use crate::task::{apply_unchecked, ActionId, GroundTask, Plan, State, SuccessorGenerator, TaskError};

/// Default limit on the number of states the oracle will enumerate.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("oracle state cap of {0} states exceeded")]
    StateCapExceeded(usize),
    #[error("oracle has {costs} costs but the task has {actions} actions")]
    CountMismatch { costs: usize, actions: usize },
    #[error("true cost {cost} of action {action} is not a finite non-negative number")]
    BadCost { action: ActionId, cost: Cost },
    #[error("true cost {cost} of action {action} lies outside tier {tier} bounds [{c_min}, {c_max}]")]
    OutsideTier { action: ActionId, tier: usize, cost: Cost, c_min: Cost, c_max: Cost },
    #[error("action {action} has positive true cost {cost} but tier {tier} has a zero lower bound")]
    UninformativeTier { action: ActionId, tier: usize, cost: Cost },
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("plan is not a valid solution of the task")]
    InvalidPlan,
}

/// True cost of every ground action.
#[derive(Clone, Debug, PartialEq)]
pub struct CostOracleTable {
    costs: Vec<Cost>,
}

impl CostOracleTable {
    /// Validates that every tier brackets the true cost, and that positive
    /// costs only meet tiers with a positive lower bound.
    pub fn new(costs: Vec<Cost>, estimators: &EstimatorTable) -> Result<Self, OracleError> {
        if costs.len() != estimators.len() {
            return Err(OracleError::CountMismatch { costs: costs.len(), actions: estimators.len() });
        }
        for (i, (&cost, set)) in costs.iter().zip(estimators.sets()).enumerate() {
            let action = ActionId(i as u32);
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(OracleError::BadCost { action, cost });
            }
            for (tier, spec) in set.tiers().iter().enumerate() {
                if !(spec.c_min <= cost && cost <= spec.c_max) {
                    return Err(OracleError::OutsideTier { action, tier, cost, c_min: spec.c_min, c_max: spec.c_max });
                }
                if cost > 0.0 && spec.c_min == 0.0 {
                    return Err(OracleError::UninformativeTier { action, tier, cost });
                }
            }
        }
        Ok(CostOracleTable { costs })
    }

    pub fn cost(&self, action: ActionId) -> Cost {
        self.costs[action.index()]
    }

    pub fn costs(&self) -> &[Cost] {
        &self.costs
    }

    /// Sum of true costs; does not check applicability.
    pub fn plan_cost(&self, plan: &Plan) -> Cost {
        plan.actions.iter().map(|&a| self.cost(a)).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSolution {
    /// `∞` when the task is unsolvable.
    pub cost: Cost,
    pub plan: Option<Plan>,
}

/// Optimal plan under the true costs.
pub fn dijkstra_optimal(
    task: &GroundTask,
    oracle: &CostOracleTable,
    cap: usize,
) -> Result<OptimalSolution, OracleError> {
    uniform_cost_search(task, oracle.costs(), cap)
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

/// Optimal plan under an arbitrary non-negative cost vector.
pub fn uniform_cost_search(task: &GroundTask, costs: &[Cost], cap: usize) -> Result<OptimalSolution, OracleError> {
    if costs.len() != task.action_count() {
        return Err(OracleError::CountMismatch { costs: costs.len(), actions: task.action_count() });
    }
    let generator = SuccessorGenerator::new(task);
    let mut ids: HashMap<State, usize> = HashMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut dist: Vec<Cost> = Vec::new();
    let mut parent: Vec<Option<(usize, ActionId)>> = Vec::new();
    let mut done: Vec<bool> = Vec::new();
    let mut heap = BinaryHeap::new();

    ids.insert(task.initial().clone(), 0);
    states.push(task.initial().clone());
    dist.push(0.0);
    parent.push(None);
    done.push(false);
    heap.push(Reverse((Key(0.0), 0usize)));

    let mut applicable = Vec::new();
    while let Some(Reverse((Key(d), id))) = heap.pop() {
        if done[id] || d > dist[id] {
            continue;
        }
        done[id] = true;
        if task.is_goal(&states[id]) {
            let mut actions = Vec::new();
            let mut cursor = id;
            while let Some((p, a)) = parent[cursor] {
                actions.push(a);
                cursor = p;
            }
            actions.reverse();
            return Ok(OptimalSolution { cost: d, plan: Some(Plan::new(actions)) });
        }
        generator.applicable_actions(task, &states[id], &mut applicable);
        for &a in &applicable {
            let next = apply_unchecked(&states[id], task.action(a));
            let nd = d + costs[a.index()];
            let sid = match ids.get(&next) {
                Some(&sid) => sid,
                None => {
                    if states.len() >= cap {
                        return Err(OracleError::StateCapExceeded(cap));
                    }
                    let sid = states.len();
                    ids.insert(next.clone(), sid);
                    states.push(next);
                    dist.push(f64::INFINITY);
                    parent.push(None);
                    done.push(false);
                    sid
                }
            };
            if nd < dist[sid] {
                dist[sid] = nd;
                parent[sid] = Some((id, a));
                heap.push(Reverse((Key(nd), sid)));
            }
        }
    }
    Ok(OptimalSolution { cost: f64::INFINITY, plan: None })
}

/// Explicit forward-reachable state graph.
pub struct StateSpace {
    pub states: Vec<State>,
    pub index: HashMap<State, usize>,
    /// `(action, successor)` pairs per state.
    pub edges: Vec<Vec<(ActionId, usize)>>,
}

impl StateSpace {
    pub fn explore(task: &GroundTask, cap: usize) -> Result<Self, OracleError> {
        let generator = SuccessorGenerator::new(task);
        let mut space = StateSpace { states: vec![task.initial().clone()], index: HashMap::new(), edges: Vec::new() };
        space.index.insert(task.initial().clone(), 0);
        let mut applicable = Vec::new();
        let mut cursor = 0;
        while cursor < space.states.len() {
            generator.applicable_actions(task, &space.states[cursor], &mut applicable);
            let mut out = Vec::with_capacity(applicable.len());
            for &a in &applicable {
                let next = apply_unchecked(&space.states[cursor], task.action(a));
                let id = match space.index.get(&next) {
                    Some(&id) => id,
                    None => {
                        if space.states.len() >= cap {
                            return Err(OracleError::StateCapExceeded(cap));
                        }
                        let id = space.states.len();
                        space.index.insert(next.clone(), id);
                        space.states.push(next);
                        id
                    }
                };
                out.push((a, id));
            }
            space.edges.push(out);
            cursor += 1;
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Optimal cost-to-go from every state under `costs` (backward Dijkstra
    /// from all goal states).
    pub fn cost_to_go(&self, task: &GroundTask, costs: &[Cost]) -> Vec<Cost> {
        let n = self.states.len();
        let mut reverse: Vec<Vec<(usize, Cost)>> = vec![Vec::new(); n];
        for (from, out) in self.edges.iter().enumerate() {
            for &(a, to) in out {
                reverse[to].push((from, costs[a.index()]));
            }
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for (i, s) in self.states.iter().enumerate() {
            if task.is_goal(s) {
                dist[i] = 0.0;
                heap.push(Reverse((Key(0.0), i)));
            }
        }
        while let Some(Reverse((Key(d), i))) = heap.pop() {
            if d > dist[i] {
                continue;
            }
            for &(from, c) in &reverse[i] {
                let nd = d + c;
                if nd < dist[from] {
                    dist[from] = nd;
                    heap.push(Reverse((Key(nd), from)));
                }
            }
        }
        dist
    }
}

/// `c(plan) <= c* · ε`, up to the shared relative tolerance.
pub fn check_epsilon_optimal(
    task: &GroundTask,
    plan: &Plan,
    oracle: &CostOracleTable,
    optimal_cost: Cost,
    epsilon: f64,
) -> Result<bool, OracleError> {
    if !task.validate_plan(plan)? {
        return Err(OracleError::InvalidPlan);
    }
    Ok(cost_within(oracle.plan_cost(plan), optimal_cost, epsilon))
}

/// `c(plan) <= c* · η_eff`.
pub fn check_eta_bound(plan: &Plan, eta_eff: f64, oracle: &CostOracleTable, optimal_cost: Cost) -> bool {
    cost_within(oracle.plan_cost(plan), optimal_cost, eta_eff)
}

fn cost_within(cost: Cost, optimal: Cost, factor: f64) -> bool {
    if factor.is_infinite() {
        return true;
    }
    cost <= optimal * factor * (1.0 + RELATIVE_TOLERANCE)
}
