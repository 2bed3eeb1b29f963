//! Forward best-first search over interval-valued action costs.
//!
//! Three strategies share one engine:
//! * [`asec`] refines an edge's bounds synchronously, only as far as the
//!   target ratio and the successor's current `g_min` require;
//! * [`indifferent`] applies every tier of an action on first touch;
//! * [`fully_lazy`] applies one tier per action, then repeatedly refines the
//!   first refinable action of the returned plan and restarts.

mod engine;
mod open_list;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{effective_ratio, within_bound, BoundCache, Cost, EstimationError, Interval, PlanBounds};
use crate::heuristics::Heuristic;
use crate::task::{GroundTask, Plan, SuccessorGenerator};
pub(crate) use engine::apply_tier;
use engine::{EdgePolicy, Engine, Exhaustive, OneTier, Synchronous};

pub use open_list::{OpenEntry, OpenList};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    EpsilonOk,
    PlanFoundBoundMissed,
    Unsolvable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::EpsilonOk => "epsilon_ok",
            Status::PlanFoundBoundMissed => "plan_found_bound_missed",
            Status::Unsolvable => "unsolvable",
        })
    }
}

/// Public view of a search node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchNode {
    pub state_id: u32,
    pub g_min: Cost,
    pub g_max: Cost,
    pub f: Cost,
    pub parent: Option<(u32, crate::task::ActionId)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expansions: u64,
    pub generations: u64,
    pub reopenings: u64,
    /// Search restarts; 1 for single-pass strategies.
    pub iterations: u64,
    pub calls_per_tier: Vec<u64>,
    pub cheap_calls: u64,
    pub expensive_calls: u64,
    /// Expensive calls available on the actions that were estimated at all.
    pub max_expensive_calls: u64,
    pub failed_estimator_calls: u64,
    pub wall_ms: f64,
    /// Sum of nominal tier latencies over all calls.
    pub simulated_ms: f64,
    /// Measured time spent inside the cost source.
    pub estimation_ms: f64,
}

impl SearchStats {
    fn absorb_cache(&mut self, cache: &BoundCache<'_>) {
        let s = cache.stats();
        self.calls_per_tier = s.calls_per_tier.clone();
        self.cheap_calls = s.cheap_calls();
        self.expensive_calls = s.expensive_calls();
        self.max_expensive_calls = cache.max_expensive_calls();
        self.failed_estimator_calls = s.failed_calls;
        self.simulated_ms = s.simulated_ms;
        self.estimation_ms = s.latency_ms_per_tier.iter().sum();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub plan: Option<Plan>,
    pub eta_eff: f64,
    pub bounds: Option<PlanBounds>,
    pub status: Status,
    pub stats: SearchStats,
}

/// Best node left in OPEN when search stopped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AltNode {
    pub g_min: Cost,
    pub f: Cost,
}

/// Search state retained for post-search refinement of the returned plan.
#[derive(Clone, Debug, PartialEq)]
pub struct Frontier {
    pub best_open: Option<AltNode>,
    /// `(g_min, g_max)` of the goal node when it was popped.
    pub goal_bounds: PlanBounds,
    /// For each state on the plan (root first), the smallest lower bound of
    /// any arrival other than the plan edge.
    pub arrival_bounds: Vec<Cost>,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub result: SearchResult,
    /// Edge interval that search used for each plan step.
    pub edge_bounds: Vec<Interval>,
    pub frontier: Option<Frontier>,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("epsilon must be a number >= 1, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

fn check_epsilon(epsilon: f64) -> Result<(), SearchError> {
    if epsilon >= 1.0 {
        Ok(())
    } else {
        Err(SearchError::InvalidEpsilon(epsilon))
    }
}

fn status_for(eta: f64, epsilon: f64) -> Status {
    if within_bound(eta, epsilon) {
        Status::EpsilonOk
    } else {
        Status::PlanFoundBoundMissed
    }
}

fn single_pass(
    task: &GroundTask,
    cache: &mut BoundCache<'_>,
    heuristic: &mut dyn Heuristic,
    epsilon: f64,
    policy: &mut dyn EdgePolicy,
) -> Result<SearchOutcome, SearchError> {
    check_epsilon(epsilon)?;
    let started = Instant::now();
    let generator = SuccessorGenerator::new(task);
    let mut engine = Engine::new(task, &generator, heuristic);
    let goal = engine.run(cache, policy)?;
    let mut stats = SearchStats {
        expansions: engine.expansions,
        generations: engine.generations,
        reopenings: engine.reopenings,
        iterations: 1,
        ..Default::default()
    };
    stats.absorb_cache(cache);
    let outcome = match goal {
        None => SearchOutcome {
            result: SearchResult {
                plan: None,
                eta_eff: f64::INFINITY,
                bounds: None,
                status: Status::Unsolvable,
                stats,
            },
            edge_bounds: Vec::new(),
            frontier: None,
        },
        Some(goal) => {
            let trace = engine.trace(goal);
            let node = &engine.nodes[goal as usize];
            let bounds = PlanBounds { c_min: node.g_min, c_max: node.g_max };
            let eta = effective_ratio(bounds.c_min, bounds.c_max);
            let mut arrival_bounds = vec![engine.nodes[0].alt_arrival];
            arrival_bounds.extend(trace.iter().map(|&(_, s, _)| engine.nodes[s as usize].alt_arrival));
            let best_open = engine.best_open().map(|(g_min, f)| AltNode { g_min, f });
            SearchOutcome {
                result: SearchResult {
                    plan: Some(Plan::new(trace.iter().map(|&(a, _, _)| a).collect())),
                    eta_eff: eta,
                    bounds: Some(bounds),
                    status: status_for(eta, epsilon),
                    stats,
                },
                edge_bounds: trace.iter().map(|&(_, _, iv)| iv).collect(),
                frontier: Some(Frontier { best_open, goal_bounds: bounds, arrival_bounds }),
            }
        }
    };
    let mut outcome = outcome;
    outcome.result.stats.wall_ms = started.elapsed().as_secs_f64() * 1000.0;
    Ok(outcome)
}

/// A* with synchronous estimation of costs.
pub fn asec(
    task: &GroundTask,
    cache: &mut BoundCache<'_>,
    heuristic: &mut dyn Heuristic,
    epsilon: f64,
) -> Result<SearchOutcome, SearchError> {
    single_pass(task, cache, heuristic, epsilon, &mut Synchronous { epsilon })
}

/// A* where every action is fully estimated the first time it is seen.
pub fn indifferent(
    task: &GroundTask,
    cache: &mut BoundCache<'_>,
    heuristic: &mut dyn Heuristic,
    epsilon: f64,
) -> Result<SearchOutcome, SearchError> {
    single_pass(task, cache, heuristic, epsilon, &mut Exhaustive)
}

/// Repeated A* with one tier per action; between passes the first plan
/// action that still has an unused tier is refined by one tier.
pub fn fully_lazy(
    task: &GroundTask,
    cache: &mut BoundCache<'_>,
    heuristic: &mut dyn Heuristic,
    epsilon: f64,
) -> Result<SearchOutcome, SearchError> {
    check_epsilon(epsilon)?;
    let started = Instant::now();
    let generator = SuccessorGenerator::new(task);
    let mut totals = SearchStats::default();
    loop {
        let mut engine = Engine::new(task, &generator, &mut *heuristic);
        let goal = engine.run(cache, &mut OneTier)?;
        totals.expansions += engine.expansions;
        totals.generations += engine.generations;
        totals.reopenings += engine.reopenings;
        totals.iterations += 1;
        let Some(goal) = goal else {
            totals.absorb_cache(cache);
            totals.wall_ms = started.elapsed().as_secs_f64() * 1000.0;
            let result = SearchResult {
                plan: None,
                eta_eff: f64::INFINITY,
                bounds: None,
                status: Status::Unsolvable,
                stats: totals,
            };
            return Ok(SearchOutcome { result, edge_bounds: Vec::new(), frontier: None });
        };
        let trace = engine.trace(goal);
        let node = &engine.nodes[goal as usize];
        let bounds = PlanBounds { c_min: node.g_min, c_max: node.g_max };
        let eta = effective_ratio(bounds.c_min, bounds.c_max);
        let refinable = trace.iter().map(|&(a, _, _)| a).find(|&a| cache.has_unused_tier(a));
        let done = within_bound(eta, epsilon) || refinable.is_none();
        if done {
            totals.absorb_cache(cache);
            totals.wall_ms = started.elapsed().as_secs_f64() * 1000.0;
            let result = SearchResult {
                plan: Some(Plan::new(trace.iter().map(|&(a, _, _)| a).collect())),
                eta_eff: eta,
                bounds: Some(bounds),
                status: status_for(eta, epsilon),
                stats: totals,
            };
            let edge_bounds = trace.iter().map(|&(_, _, iv)| iv).collect();
            return Ok(SearchOutcome { result, edge_bounds, frontier: None });
        }
        let action = refinable.expect("checked above");
        let tier = cache.get_estimator(action).expect("unused tier");
        apply_tier(cache, action, tier)?;
    }
}
