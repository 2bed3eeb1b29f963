//! End-of-search estimations: spend leftover estimator tiers on the edges of
//! a plan that missed its ratio target, without searching again.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimation::{effective_ratio, within_bound, BoundCache, Cost, EstimationError, PlanBounds};
use crate::search::Frontier;
use crate::task::Plan;

/// Which value of the best OPEN node serves as the alternative lower bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AltBound {
    #[default]
    GMin,
    F,
}

impl fmt::Display for AltBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AltBound::GMin => "gmin",
            AltBound::F => "f",
        })
    }
}

impl FromStr for AltBound {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "g" | "g_min" | "gmin" => Ok(AltBound::GMin),
            "f" => Ok(AltBound::F),
            other => Err(format!("unknown alternative bound `{other}` (expected gmin or f)")),
        }
    }
}

pub struct EseContext<'c, 'a> {
    pub plan: &'c Plan,
    pub cache: &'c mut BoundCache<'a>,
    pub frontier: &'c Frontier,
    pub epsilon: f64,
    pub alt: AltBound,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EseStats {
    pub calls: u64,
    pub cheap_calls: u64,
    pub expensive_calls: u64,
    /// Ratio after each call.
    pub eta_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EseResult {
    pub eta_eff: f64,
    /// Cached bounds of the plan after refinement.
    pub bounds: PlanBounds,
    /// Denominator of `eta_eff`: a lower bound on the optimal cost.
    pub lower_bound: Cost,
    pub stats: EseStats,
}

struct Ratio {
    eta: f64,
    lower: Cost,
}

/// Ratio of the plan's cached upper bound to the best available lower bound
/// on any plan's cost.
///
/// Besides the refined plan lower bound and the best OPEN node, paths that
/// re-enter the plan through an edge search rejected are covered by the
/// recorded arrival bounds, propagated along the plan with current cached
/// lower bounds.
fn ratio(plan: &Plan, cache: &BoundCache<'_>, frontier: &Frontier, alt: Option<Cost>) -> Ratio {
    let bounds = cache.plan_bounds(plan);
    let mut detour = frontier.arrival_bounds.first().copied().unwrap_or(f64::INFINITY);
    for (k, &action) in plan.actions.iter().enumerate() {
        let via_prefix = detour + cache.bounds(action).lo;
        detour = via_prefix.min(frontier.arrival_bounds.get(k + 1).copied().unwrap_or(f64::INFINITY));
    }
    let mut lower = bounds.c_min.min(detour);
    if let Some(alt) = alt {
        lower = lower.min(alt);
    }
    let lower = lower.max(frontier.goal_bounds.c_min);
    Ratio { eta: effective_ratio(lower, bounds.c_max), lower }
}

/// Refines plan edges in order, each as far as its tiers allow, stopping as
/// soon as the ratio meets `epsilon`. The alternative node is read once.
pub fn ese(ctx: EseContext<'_, '_>) -> Result<EseResult, EstimationError> {
    let EseContext { plan, cache, frontier, epsilon, alt } = ctx;
    let alt_value = frontier.best_open.map(|n| match alt {
        AltBound::GMin => n.g_min,
        AltBound::F => n.f,
    });
    let start = ratio(plan, cache, frontier, alt_value);
    let initial = effective_ratio(frontier.goal_bounds.c_min, frontier.goal_bounds.c_max);
    let mut eta = start.eta.min(initial);
    let mut lower = start.lower;
    let mut stats = EseStats::default();
    for &action in &plan.actions {
        while !within_bound(eta, epsilon) && cache.has_unused_tier(action) {
            let tier = cache.get_estimator(action).expect("unused tier");
            crate::search::apply_tier(cache, action, tier)?;
            stats.calls += 1;
            if tier == 0 {
                stats.cheap_calls += 1;
            } else {
                stats.expensive_calls += 1;
            }
            let r = ratio(plan, cache, frontier, alt_value);
            if r.eta <= eta {
                eta = r.eta;
                lower = r.lower;
            }
            stats.eta_trace.push(eta);
        }
        if within_bound(eta, epsilon) {
            break;
        }
    }
    Ok(EseResult { eta_eff: eta, bounds: cache.plan_bounds(plan), lower_bound: lower, stats })
}
