//! One-call planning: pick a strategy, run it, optionally refine afterwards.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimation::{BoundCache, Interval};
use crate::heuristics::{HeuristicCostView, HeuristicKind};
use crate::post_search::{ese, AltBound, EseContext, EseResult};
use crate::search::{self, SearchError, SearchResult, Status};
use crate::task::GroundTask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "asec")]
    Asec,
    #[serde(rename = "asec+ese")]
    AsecEse,
    #[serde(rename = "indifferent")]
    Indifferent,
    #[serde(rename = "fully_lazy")]
    FullyLazy,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Asec, Algorithm::AsecEse, Algorithm::Indifferent, Algorithm::FullyLazy];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Asec => "asec",
            Algorithm::AsecEse => "asec+ese",
            Algorithm::Indifferent => "indifferent",
            Algorithm::FullyLazy => "fully_lazy",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "asec" => Ok(Algorithm::Asec),
            "asec+ese" | "asec-ese" | "ese" => Ok(Algorithm::AsecEse),
            "indifferent" => Ok(Algorithm::Indifferent),
            "fully_lazy" | "fully-lazy" | "lazy" => Ok(Algorithm::FullyLazy),
            other => Err(format!("unknown algorithm `{other}` (expected asec, asec+ese, indifferent or fully_lazy)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannerConfig {
    pub algorithm: Algorithm,
    pub heuristic: HeuristicKind,
    pub epsilon: f64,
    pub ese_alt: AltBound,
}

impl PlannerConfig {
    pub fn new(algorithm: Algorithm, heuristic: HeuristicKind, epsilon: f64) -> Self {
        PlannerConfig { algorithm, heuristic, epsilon, ese_alt: AltBound::GMin }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EseReport {
    /// Whether refinement ran: the bound was missed and some plan action
    /// still had an unused tier.
    pub invoked: bool,
    pub success: bool,
    pub calls: u64,
    pub expensive_calls: u64,
    pub eta_before: f64,
    pub eta_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    /// Final result; with post-search refinement its ratio, bounds and status
    /// reflect the refined values while `stats` cover the search only.
    pub result: SearchResult,
    /// Edge intervals the search used along the plan.
    pub edge_bounds: Vec<Interval>,
    pub ese: Option<EseReport>,
}

pub fn solve(
    task: &GroundTask,
    cache: &mut BoundCache<'_>,
    config: &PlannerConfig,
) -> Result<SolveReport, SearchError> {
    let view = HeuristicCostView::cheapest_lower_bounds(cache.table());
    let mut heuristic = config.heuristic.build(task, &view);
    let eps = config.epsilon;
    let outcome = match config.algorithm {
        Algorithm::Asec | Algorithm::AsecEse => search::asec(task, cache, heuristic.as_mut(), eps)?,
        Algorithm::Indifferent => search::indifferent(task, cache, heuristic.as_mut(), eps)?,
        Algorithm::FullyLazy => search::fully_lazy(task, cache, heuristic.as_mut(), eps)?,
    };
    let mut result = outcome.result;
    let mut ese_report = None;
    if config.algorithm == Algorithm::AsecEse {
        let plan = result.plan.clone();
        let refinable = plan.as_ref().is_some_and(|p| p.actions.iter().any(|&a| cache.has_unused_tier(a)));
        let invoked = result.status == Status::PlanFoundBoundMissed && refinable;
        let mut report = EseReport {
            invoked,
            success: false,
            calls: 0,
            expensive_calls: 0,
            eta_before: result.eta_eff,
            eta_after: result.eta_eff,
        };
        if invoked {
            let plan = plan.expect("checked above");
            let frontier = outcome.frontier.as_ref().expect("single-pass search keeps its frontier");
            let EseResult { eta_eff, bounds, stats, .. } =
                ese(EseContext { plan: &plan, cache, frontier, epsilon: eps, alt: config.ese_alt })?;
            report.calls = stats.calls;
            report.expensive_calls = stats.expensive_calls;
            report.eta_after = eta_eff;
            result.eta_eff = eta_eff;
            result.bounds = Some(bounds);
            if crate::estimation::within_bound(eta_eff, eps) {
                report.success = true;
                result.status = Status::EpsilonOk;
            }
        }
        ese_report = Some(report);
    }
    Ok(SolveReport { result, edge_bounds: outcome.edge_bounds, ese: ese_report })
}
