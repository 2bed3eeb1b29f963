//! Interval-valued cost estimators, the per-action bound cache and plan-level
//! bound arithmetic.
//!
//! Every ground action owns an ordered list of estimator tiers. A tier, when
//! applied, yields an interval `[c_min, c_max]` containing the action's true
//! cost. The [`BoundCache`] hands tiers out cheapest-first, one at a time, and
//! keeps the intersection of everything returned so far.

mod external;

use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::CostOracleTable;
use crate::task::{ActionId, GroundTask, Plan};

pub use external::{ExternalError, ExternalSource, DEFAULT_EXTERNAL_TIMEOUT};

/// Non-negative action or plan cost.
pub type Cost = f64;

/// Relative slack used when comparing a ratio against a target bound.
pub const RELATIVE_TOLERANCE: f64 = 1e-12;

/// `ratio <= bound`, up to [`RELATIVE_TOLERANCE`].
#[inline]
pub fn within_bound(ratio: f64, bound: f64) -> bool {
    ratio <= bound * (1.0 + RELATIVE_TOLERANCE)
}

/// Effective ratio `upper / lower`.
///
/// An unbounded upper sum always gives `∞`. Otherwise a zero lower sum gives
/// exactly 1: every lower bound is zero, so every true cost is zero.
#[inline]
pub fn effective_ratio(lower: Cost, upper: Cost) -> f64 {
    if upper.is_infinite() {
        f64::INFINITY
    } else if lower == 0.0 {
        1.0
    } else {
        upper / lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Cost,
    pub hi: Cost,
}

impl Interval {
    /// Bounds of an action nobody has estimated yet.
    pub const UNKNOWN: Interval = Interval { lo: 0.0, hi: f64::INFINITY };

    pub fn new(lo: Cost, hi: Cost) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, cost: Cost) -> bool {
        self.lo <= cost && cost <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn ratio(&self) -> f64 {
        effective_ratio(self.lo, self.hi)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("cmin exceeds cmax ({c_min} > {c_max})")]
    CminExceedsCmax { c_min: Cost, c_max: Cost },
    #[error("negative bound {0}")]
    NegativeBound(Cost),
    #[error("bound is not a finite number: {0}")]
    NonFinite(f64),
    #[error("tau_ms must be a finite non-negative number, got {0}")]
    BadLatency(f64),
    #[error("estimator set has no tiers")]
    Empty,
    #[error(
        "tier {index} has tau_ms {tau_ms} below the preceding tier's {previous}; tiers must be ordered cheapest-first"
    )]
    TierOrder { index: usize, tau_ms: f64, previous: f64 },
    #[error("estimator table has {sets} sets but the task has {actions} actions")]
    CountMismatch { sets: usize, actions: usize },
}

/// One estimator tier: the interval it returns and its nominal latency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub c_min: Cost,
    pub c_max: Cost,
    pub tau_ms: f64,
}

impl EstimatorSpec {
    pub fn new(c_min: Cost, c_max: Cost, tau_ms: f64) -> Result<Self, SpecError> {
        for v in [c_min, c_max] {
            if !v.is_finite() {
                return Err(SpecError::NonFinite(v));
            }
            if v < 0.0 {
                return Err(SpecError::NegativeBound(v));
            }
        }
        if c_min > c_max {
            return Err(SpecError::CminExceedsCmax { c_min, c_max });
        }
        if !(tau_ms.is_finite() && tau_ms >= 0.0) {
            return Err(SpecError::BadLatency(tau_ms));
        }
        Ok(EstimatorSpec { c_min, c_max, tau_ms })
    }

    /// A single exact tier with zero latency.
    pub fn exact(cost: Cost) -> Self {
        EstimatorSpec { c_min: cost, c_max: cost, tau_ms: 0.0 }
    }

    pub fn interval(&self) -> Interval {
        Interval { lo: self.c_min, hi: self.c_max }
    }
}

/// Ordered tiers for one action, cheapest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSet {
    tiers: Vec<EstimatorSpec>,
}

impl EstimatorSet {
    pub fn new(tiers: Vec<EstimatorSpec>) -> Result<Self, SpecError> {
        if tiers.is_empty() {
            return Err(SpecError::Empty);
        }
        for (index, pair) in tiers.windows(2).enumerate() {
            if pair[1].tau_ms < pair[0].tau_ms {
                return Err(SpecError::TierOrder {
                    index: index + 1,
                    tau_ms: pair[1].tau_ms,
                    previous: pair[0].tau_ms,
                });
            }
        }
        Ok(EstimatorSet { tiers })
    }

    pub fn exact(cost: Cost) -> Self {
        EstimatorSet { tiers: vec![EstimatorSpec::exact(cost)] }
    }

    pub fn tiers(&self) -> &[EstimatorSpec] {
        &self.tiers
    }

    pub fn len(&self) -> usize {
        self.tiers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiers.is_empty()
    }
}

/// Estimator sets indexed by action id.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorTable {
    sets: Vec<EstimatorSet>,
}

impl EstimatorTable {
    pub fn new(task: &GroundTask, sets: Vec<EstimatorSet>) -> Result<Self, SpecError> {
        if sets.len() != task.action_count() {
            return Err(SpecError::CountMismatch { sets: sets.len(), actions: task.action_count() });
        }
        Ok(EstimatorTable { sets })
    }

    /// Table without a task to check the length against.
    pub fn from_sets(sets: Vec<EstimatorSet>) -> Self {
        EstimatorTable { sets }
    }

    /// Every action gets a single exact tier with the given cost.
    pub fn exact(costs: &[Cost]) -> Self {
        EstimatorTable { sets: costs.iter().map(|&c| EstimatorSet::exact(c)).collect() }
    }

    pub fn set(&self, action: ActionId) -> &EstimatorSet {
        &self.sets[action.index()]
    }

    pub fn sets(&self) -> &[EstimatorSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn max_tiers(&self) -> usize {
        self.sets.iter().map(EstimatorSet::len).max().unwrap_or(0)
    }

    /// Tier-0 lower bound of every action.
    pub fn cheapest_lower_bounds(&self) -> Vec<Cost> {
        self.sets.iter().map(|s| s.tiers[0].c_min).collect()
    }
}

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("estimator contract violated by action {action} tier {tier}: lower bound {lo} exceeds upper bound {hi}")]
    Contract { action: ActionId, tier: usize, lo: Cost, hi: Cost },
    #[error("inconsistent estimators for action {action}: tier {tier} returned [{lo}, {hi}] disjoint from cached [{cached_lo}, {cached_hi}]")]
    Inconsistent { action: ActionId, tier: usize, lo: Cost, hi: Cost, cached_lo: Cost, cached_hi: Cost },
    #[error("tier {tier} of action {action} was never issued by get_estimator")]
    NotIssued { action: ActionId, tier: usize },
    #[error("true cost {cost} of action {action} lies outside cached bounds [{lo}, {hi}]")]
    OracleViolation { action: ActionId, cost: Cost, lo: Cost, hi: Cost },
    #[error("external estimator failed on action {action} tier {tier}: {source}")]
    External { action: ActionId, tier: usize, source: ExternalError },
}

impl EstimationError {
    /// Failures after which search carries on as if the tier did not exist.
    pub fn is_tier_unavailable(&self) -> bool {
        matches!(self, EstimationError::Contract { .. } | EstimationError::External { .. })
    }
}

/// Backend that actually evaluates a tier.
pub trait CostSource {
    fn estimate(&mut self, action: ActionId, tier: usize, spec: &EstimatorSpec) -> Result<Interval, EstimationError>;
}

/// Returns the interval stored in the estimator table.
#[derive(Clone, Copy, Debug, Default)]
pub struct TableSource {
    /// Sleep `tau_ms` on every call.
    pub simulate_latency: bool,
}

impl CostSource for TableSource {
    fn estimate(&mut self, _action: ActionId, _tier: usize, spec: &EstimatorSpec) -> Result<Interval, EstimationError> {
        if self.simulate_latency && spec.tau_ms > 0.0 {
            thread::sleep(Duration::from_secs_f64(spec.tau_ms / 1000.0));
        }
        Ok(spec.interval())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimationStats {
    pub calls_per_tier: Vec<u64>,
    /// Sum of nominal `tau_ms` over every call.
    pub simulated_ms: f64,
    /// Measured wall-clock time spent inside the cost source, per tier.
    pub latency_ms_per_tier: Vec<f64>,
    /// Calls whose failure was absorbed as an unavailable tier.
    pub failed_calls: u64,
}

impl EstimationStats {
    pub fn total_calls(&self) -> u64 {
        self.calls_per_tier.iter().sum()
    }

    pub fn cheap_calls(&self) -> u64 {
        self.calls_per_tier.first().copied().unwrap_or(0)
    }

    /// Calls to tiers past the first.
    pub fn expensive_calls(&self) -> u64 {
        self.calls_per_tier.iter().skip(1).sum()
    }
}

#[derive(Clone, Copy, Debug)]
struct CacheEntry {
    bounds: Interval,
    next_tier: u16,
    /// Bit `i` set once tier `i` has been applied successfully.
    applied: u64,
}

/// Tightest known interval per action, plus which tiers are still unused.
pub struct BoundCache<'a> {
    table: &'a EstimatorTable,
    source: Box<dyn CostSource + 'a>,
    oracle: Option<&'a CostOracleTable>,
    entries: Vec<CacheEntry>,
    stats: EstimationStats,
}

impl<'a> BoundCache<'a> {
    pub fn new(table: &'a EstimatorTable, source: Box<dyn CostSource + 'a>) -> Self {
        assert!(table.max_tiers() <= 64, "at most 64 tiers per action are supported");
        let tiers = table.max_tiers();
        BoundCache {
            table,
            source,
            oracle: None,
            entries: vec![CacheEntry { bounds: Interval::UNKNOWN, next_tier: 0, applied: 0 }; table.len()],
            stats: EstimationStats {
                calls_per_tier: vec![0; tiers],
                latency_ms_per_tier: vec![0.0; tiers],
                ..Default::default()
            },
        }
    }

    /// Cache backed by the tier values of the table itself.
    pub fn from_table(table: &'a EstimatorTable) -> Self {
        BoundCache::new(table, Box::new(TableSource::default()))
    }

    /// Checks every cached interval against the true costs after each call.
    pub fn with_oracle(mut self, oracle: &'a CostOracleTable) -> Self {
        self.oracle = Some(oracle);
        self
    }

    pub fn table(&self) -> &'a EstimatorTable {
        self.table
    }

    pub fn action_count(&self) -> usize {
        self.entries.len()
    }

    /// Issues the next unused tier of `action`, if any.
    pub fn get_estimator(&mut self, action: ActionId) -> Option<usize> {
        let tiers = self.table.set(action).len();
        let entry = &mut self.entries[action.index()];
        let tier = entry.next_tier as usize;
        if tier < tiers {
            entry.next_tier += 1;
            Some(tier)
        } else {
            None
        }
    }

    /// Applies a previously issued tier and returns the tightened interval.
    pub fn apply_estimator(&mut self, action: ActionId, tier: usize) -> Result<Interval, EstimationError> {
        let entry = self.entries[action.index()];
        if tier >= entry.next_tier as usize || entry.applied >> tier & 1 == 1 {
            return Err(EstimationError::NotIssued { action, tier });
        }
        let spec = self.table.set(action).tiers()[tier];
        self.stats.calls_per_tier[tier] += 1;
        self.stats.simulated_ms += spec.tau_ms;
        let started = Instant::now();
        let returned = self.source.estimate(action, tier, &spec);
        self.stats.latency_ms_per_tier[tier] += started.elapsed().as_secs_f64() * 1000.0;
        let fresh = match returned {
            Ok(iv) => iv,
            Err(e) => {
                if e.is_tier_unavailable() {
                    self.stats.failed_calls += 1;
                }
                return Err(e);
            }
        };
        if fresh.lo.is_nan() || fresh.hi.is_nan() || fresh.lo > fresh.hi {
            self.stats.failed_calls += 1;
            return Err(EstimationError::Contract { action, tier, lo: fresh.lo, hi: fresh.hi });
        }
        let cached = entry.bounds;
        let tightened = cached.intersect(&fresh).ok_or(EstimationError::Inconsistent {
            action,
            tier,
            lo: fresh.lo,
            hi: fresh.hi,
            cached_lo: cached.lo,
            cached_hi: cached.hi,
        })?;
        if let Some(oracle) = self.oracle {
            let cost = oracle.cost(action);
            if !tightened.contains(cost) {
                return Err(EstimationError::OracleViolation { action, cost, lo: tightened.lo, hi: tightened.hi });
            }
        }
        let entry = &mut self.entries[action.index()];
        entry.bounds = tightened;
        entry.applied |= 1 << tier;
        Ok(tightened)
    }

    /// Issues and applies every remaining tier. Tiers whose call fails in a
    /// recoverable way are skipped.
    pub fn apply_all_remaining(&mut self, action: ActionId) -> Result<Interval, EstimationError> {
        while let Some(tier) = self.get_estimator(action) {
            match self.apply_estimator(action, tier) {
                Ok(_) => {}
                Err(e) if e.is_tier_unavailable() => {
                    log::warn!("treating tier as unavailable: {e}");
                }
                Err(e) => return Err(e),
            }
        }
        Ok(self.bounds(action))
    }

    /// Current tightest interval; `[0, ∞]` until something succeeds.
    pub fn bounds(&self, action: ActionId) -> Interval {
        self.entries[action.index()].bounds
    }

    /// Whether at least one tier has been issued for the action.
    pub fn is_touched(&self, action: ActionId) -> bool {
        self.entries[action.index()].next_tier > 0
    }

    pub fn has_unused_tier(&self, action: ActionId) -> bool {
        (self.entries[action.index()].next_tier as usize) < self.table.set(action).len()
    }

    pub fn next_tier(&self, action: ActionId) -> usize {
        self.entries[action.index()].next_tier as usize
    }

    /// 0/1 call counter per tier of one action.
    pub fn calls_per_tier(&self, action: ActionId) -> Vec<u32> {
        let applied = self.entries[action.index()].applied;
        (0..self.table.set(action).len()).map(|t| (applied >> t & 1) as u32).collect()
    }

    pub fn stats(&self) -> &EstimationStats {
        &self.stats
    }

    /// Expensive calls the estimation-indifferent strategy would make on the
    /// actions touched so far.
    pub fn max_expensive_calls(&self) -> u64 {
        self.entries
            .iter()
            .zip(self.table.sets())
            .filter(|(e, _)| e.next_tier > 0)
            .map(|(_, set)| set.len() as u64 - 1)
            .sum()
    }

    /// Tightest known lower bound per action, falling back to the tier-0
    /// lower bound for untouched actions.
    pub fn lower_bound_view(&self) -> Vec<Cost> {
        self.entries
            .iter()
            .zip(self.table.sets())
            .map(|(e, set)| if e.next_tier > 0 { e.bounds.lo } else { set.tiers()[0].c_min })
            .collect()
    }

    /// Sum of cached bounds along the plan.
    pub fn plan_bounds(&self, plan: &Plan) -> PlanBounds {
        PlanBounds::from_intervals(plan.actions.iter().map(|&a| self.bounds(a)))
    }
}

/// Sums of per-action lower and upper bounds over a plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanBounds {
    pub c_min: Cost,
    pub c_max: Cost,
}

impl PlanBounds {
    pub const ZERO: PlanBounds = PlanBounds { c_min: 0.0, c_max: 0.0 };

    /// Accumulates left to right, matching how search builds `g` values.
    pub fn from_intervals(intervals: impl IntoIterator<Item = Interval>) -> Self {
        intervals
            .into_iter()
            .fold(PlanBounds::ZERO, |acc, iv| PlanBounds { c_min: acc.c_min + iv.lo, c_max: acc.c_max + iv.hi })
    }

    pub fn eta_eff(&self) -> f64 {
        effective_ratio(self.c_min, self.c_max)
    }
}
