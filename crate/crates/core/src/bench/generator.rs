//! Seeded generation of estimator tables and random STRIPS tasks.

use thiserror::Error;

use crate::estimation::{Cost, EstimatorSet, EstimatorSpec, EstimatorTable};
use crate::oracle::CostOracleTable;
use crate::task::{applicable, apply, ActionId, AtomId, GroundAction, GroundTask, State};

/// SplitMix64 (Steele, Lea and Flood). Portable and fully specified:
/// `state += 0x9E3779B97F4A7C15`, then two xor-shift-multiply rounds.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("action {action} has base cost {cost}; the transformation needs a positive finite cost")]
    BadBaseCost { action: ActionId, cost: Cost },
    #[error("probability {name} = {value} is outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
    #[error("base cost list has {costs} entries but the task has {actions} actions")]
    CountMismatch { costs: usize, actions: usize },
}

/// Probabilities of the transformation: `p1` marks an action as estimated,
/// `p2` and `p3` independently add the `(2c, 4c)` and `(2c, 2c)` tiers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TierProbabilities {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl TierProbabilities {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        for (name, value) in [("p1", self.p1), ("p2", self.p2), ("p3", self.p3)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GeneratorError::BadProbability { name, value });
            }
        }
        Ok(())
    }
}

/// Builds estimator tiers and true costs from base costs.
///
/// An estimated action with base cost `c` gets `(c, 4c)` first, then
/// `(2c, 4c)` and `(2c, 2c)` when drawn; its true cost is `2c`. Any other
/// action gets the single exact tier `(c, c)` and true cost `c`. Three
/// uniforms are drawn per action in action order, whatever the outcome.
/// The cheap tier has latency 0, the others `tau_ms`.
pub fn synthesize_estimators(
    base_costs: &[Cost],
    probs: TierProbabilities,
    seed: u64,
    tau_ms: f64,
) -> Result<(EstimatorTable, CostOracleTable), GeneratorError> {
    probs.validate()?;
    let mut rng = SplitMix64::new(seed);
    let mut sets = Vec::with_capacity(base_costs.len());
    let mut truth = Vec::with_capacity(base_costs.len());
    for (i, &c) in base_costs.iter().enumerate() {
        if !(c.is_finite() && c > 0.0) {
            return Err(GeneratorError::BadBaseCost { action: ActionId(i as u32), cost: c });
        }
        let (u1, u2, u3) = (rng.next_f64(), rng.next_f64(), rng.next_f64());
        let tier = |lo: f64, hi: f64, tau: f64| EstimatorSpec::new(lo, hi, tau).expect("valid by construction");
        if u1 < probs.p1 {
            let mut tiers = vec![tier(c, 4.0 * c, 0.0)];
            if u2 < probs.p2 {
                tiers.push(tier(2.0 * c, 4.0 * c, tau_ms));
            }
            if u3 < probs.p3 {
                tiers.push(tier(2.0 * c, 2.0 * c, tau_ms));
            }
            sets.push(EstimatorSet::new(tiers).expect("non-decreasing latency"));
            truth.push(2.0 * c);
        } else {
            sets.push(EstimatorSet::new(vec![tier(c, c, 0.0)]).expect("one tier"));
            truth.push(c);
        }
    }
    let table = EstimatorTable::from_sets(sets);
    let oracle = CostOracleTable::new(truth, &table).expect("tiers contain the true cost by construction");
    Ok((table, oracle))
}

/// Shape of a random STRIPS task.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomTaskParams {
    pub atoms: usize,
    pub actions: usize,
    pub max_pre: usize,
    pub max_add: usize,
    pub max_del: usize,
    pub max_cost: u32,
    pub goal_size: usize,
    pub walk_length: usize,
}

impl Default for RandomTaskParams {
    fn default() -> Self {
        RandomTaskParams {
            atoms: 10,
            actions: 30,
            max_pre: 2,
            max_add: 2,
            max_del: 2,
            max_cost: 10,
            goal_size: 2,
            walk_length: 8,
        }
    }
}

fn distinct_atoms(rng: &mut SplitMix64, n: usize, k: usize, exclude: &[AtomId]) -> Vec<AtomId> {
    let mut pool: Vec<AtomId> = (0..n as u32).map(AtomId).filter(|a| !exclude.contains(a)).collect();
    let k = k.min(pool.len());
    for i in 0..k {
        let j = i + rng.below(pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Random task that is solvable by construction: the goal is a set of atoms
/// true at the end of a random walk from the initial state. Returns the task
/// and integer base costs in `1..=max_cost`.
pub fn random_task(params: &RandomTaskParams, seed: u64) -> (GroundTask, Vec<Cost>) {
    let mut rng = SplitMix64::new(seed);
    let n = params.atoms;
    let names = (0..n).map(|i| format!("p{i}")).collect();
    let initial_atoms: Vec<AtomId> = (0..n as u32).map(AtomId).filter(|_| rng.next_f64() < 0.5).collect();
    let initial = State::from_atoms(n, initial_atoms);
    let mut actions = Vec::with_capacity(params.actions);
    let mut costs = Vec::with_capacity(params.actions);
    for i in 0..params.actions {
        let k = rng_len(&mut rng, params.max_pre);
        let pre = distinct_atoms(&mut rng, n, k, &[]);
        let k = 1 + rng_len(&mut rng, params.max_add.saturating_sub(1));
        let add = distinct_atoms(&mut rng, n, k, &[]);
        let k = rng_len(&mut rng, params.max_del);
        let del = distinct_atoms(&mut rng, n, k, &add);
        actions.push(GroundAction::new(ActionId(i as u32), format!("a{i}"), pre, add, del));
        costs.push((1 + rng.below(params.max_cost.max(1) as usize)) as Cost);
    }
    let mut state = initial.clone();
    for _ in 0..params.walk_length {
        let options: Vec<&GroundAction> = actions.iter().filter(|a| applicable(&state, a)).collect();
        if options.is_empty() {
            break;
        }
        let pick = options[rng.below(options.len())];
        state = apply(&state, pick).expect("applicable");
    }
    // Prefer atoms the walk made true, then any true atom.
    let mut changed: Vec<AtomId> = state.true_atoms().filter(|&a| !initial.holds(a)).collect();
    let mut rest: Vec<AtomId> = state.true_atoms().filter(|&a| initial.holds(a)).collect();
    shuffle(&mut rng, &mut changed);
    shuffle(&mut rng, &mut rest);
    changed.extend(rest);
    changed.truncate(params.goal_size.max(1));
    if changed.is_empty() {
        // Nothing is true at the end of the walk: the empty goal is the only
        // one the walk certifies.
        log::debug!("random task {seed}: empty goal");
    }
    let task = GroundTask::new(names, actions, initial, changed).expect("valid by construction");
    (task, costs)
}

fn rng_len(rng: &mut SplitMix64, max: usize) -> usize {
    rng.below(max + 1)
}

fn shuffle<T>(rng: &mut SplitMix64, v: &mut [T]) {
    for i in (1..v.len()).rev() {
        v.swap(i, rng.below(i + 1));
    }
}
