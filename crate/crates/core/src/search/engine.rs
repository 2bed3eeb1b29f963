//! Best-first engine shared by all search strategies. The strategies differ
//! only in how they obtain the bounds of an edge when it is relaxed.

use std::collections::HashMap;

use super::open_list::OpenList;
use crate::estimation::{effective_ratio, within_bound, BoundCache, Cost, EstimationError, Interval};
use crate::heuristics::Heuristic;
use crate::task::{apply_unchecked, ActionId, GroundTask, State, SuccessorGenerator};

/// Arrival bounds `(g̲, ḡ)` at a successor via one edge.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Arrival {
    pub g_lo: Cost,
    pub g_hi: Cost,
    /// Edge interval the arrival was computed from.
    pub edge: Interval,
}

pub(crate) trait EdgePolicy {
    /// `parent` is `(g_min, g_max)` of the expanded node and `succ_g_min` the
    /// current `g_min` of the successor (`∞` if new).
    fn arrival(
        &mut self,
        cache: &mut BoundCache<'_>,
        action: ActionId,
        parent: (Cost, Cost),
        succ_g_min: Cost,
    ) -> Result<Arrival, EstimationError>;
}

fn arrival_from(parent: (Cost, Cost), edge: Interval) -> Arrival {
    Arrival { g_lo: parent.0 + edge.lo, g_hi: parent.1 + edge.hi, edge }
}

/// Applies one issued tier; a recoverable failure leaves the cache as is.
pub(crate) fn apply_tier(
    cache: &mut BoundCache<'_>,
    action: ActionId,
    tier: usize,
) -> Result<Interval, EstimationError> {
    match cache.apply_estimator(action, tier) {
        Ok(iv) => Ok(iv),
        Err(e) if e.is_tier_unavailable() => {
            log::warn!("treating tier as unavailable: {e}");
            Ok(cache.bounds(action))
        }
        Err(e) => Err(e),
    }
}

/// Synchronous refinement: tiers are applied one at a time until the arrival
/// meets `epsilon`, cannot improve the successor, or tiers run out.
pub(crate) struct Synchronous {
    pub epsilon: f64,
}

impl EdgePolicy for Synchronous {
    fn arrival(
        &mut self,
        cache: &mut BoundCache<'_>,
        action: ActionId,
        parent: (Cost, Cost),
        succ_g_min: Cost,
    ) -> Result<Arrival, EstimationError> {
        let mut arrival = if cache.is_touched(action) {
            arrival_from(parent, cache.bounds(action))
        } else {
            Arrival { g_lo: 0.0, g_hi: f64::INFINITY, edge: Interval::UNKNOWN }
        };
        let mut eta =
            if cache.is_touched(action) { effective_ratio(arrival.g_lo, arrival.g_hi) } else { f64::INFINITY };
        while !within_bound(eta, self.epsilon) && arrival.g_lo < succ_g_min && cache.has_unused_tier(action) {
            let tier = cache.get_estimator(action).expect("unused tier");
            let edge = apply_tier(cache, action, tier)?;
            arrival = arrival_from(parent, edge);
            eta = effective_ratio(arrival.g_lo, arrival.g_hi);
        }
        if !cache.is_touched(action) {
            // Nothing was issued: the guard failed on an untouched edge.
            arrival = arrival_from(parent, Interval::UNKNOWN);
        }
        Ok(arrival)
    }
}

/// Applies every tier the first time an action is seen.
pub(crate) struct Exhaustive;

impl EdgePolicy for Exhaustive {
    fn arrival(
        &mut self,
        cache: &mut BoundCache<'_>,
        action: ActionId,
        parent: (Cost, Cost),
        _succ_g_min: Cost,
    ) -> Result<Arrival, EstimationError> {
        if !cache.is_touched(action) {
            cache.apply_all_remaining(action)?;
        }
        Ok(arrival_from(parent, cache.bounds(action)))
    }
}

/// Applies only the first unused tier the first time an action is seen.
pub(crate) struct OneTier;

impl EdgePolicy for OneTier {
    fn arrival(
        &mut self,
        cache: &mut BoundCache<'_>,
        action: ActionId,
        parent: (Cost, Cost),
        _succ_g_min: Cost,
    ) -> Result<Arrival, EstimationError> {
        if !cache.is_touched(action) {
            if let Some(tier) = cache.get_estimator(action) {
                apply_tier(cache, action, tier)?;
            }
        }
        Ok(arrival_from(parent, cache.bounds(action)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum NodeStatus {
    /// Generated, never queued (dead end).
    Pruned,
    Open,
    Closed,
}

#[derive(Clone, Debug)]
pub(crate) struct NodeData {
    pub g_min: Cost,
    pub g_max: Cost,
    pub h: Cost,
    pub parent: Option<(u32, ActionId)>,
    /// Edge interval used when `parent` was set.
    pub edge: Interval,
    /// Smallest lower bound of any recorded arrival other than the current
    /// parent edge.
    pub alt_arrival: Cost,
    pub status: NodeStatus,
    pub open_seq: u64,
}

pub(crate) struct Engine<'t, 'h> {
    pub task: &'t GroundTask,
    generator: &'t SuccessorGenerator,
    heuristic: &'h mut dyn Heuristic,
    pub states: Vec<State>,
    index: HashMap<State, u32>,
    pub nodes: Vec<NodeData>,
    pub open: OpenList,
    pub expansions: u64,
    pub generations: u64,
    pub reopenings: u64,
}

impl<'t, 'h> Engine<'t, 'h> {
    pub fn new(task: &'t GroundTask, generator: &'t SuccessorGenerator, heuristic: &'h mut dyn Heuristic) -> Self {
        Engine {
            task,
            generator,
            heuristic,
            states: Vec::new(),
            index: HashMap::new(),
            nodes: Vec::new(),
            open: OpenList::new(),
            expansions: 0,
            generations: 0,
            reopenings: 0,
        }
    }

    fn lookup_or_insert(&mut self, state: State) -> u32 {
        if let Some(&id) = self.index.get(&state) {
            return id;
        }
        let id = self.states.len() as u32;
        let h = self.heuristic.evaluate(&state);
        self.nodes.push(NodeData {
            g_min: f64::INFINITY,
            g_max: f64::INFINITY,
            h,
            parent: None,
            edge: Interval::UNKNOWN,
            alt_arrival: f64::INFINITY,
            status: NodeStatus::Pruned,
            open_seq: 0,
        });
        self.index.insert(state.clone(), id);
        self.states.push(state);
        id
    }

    fn enqueue(&mut self, id: u32) {
        let node = &mut self.nodes[id as usize];
        debug_assert!(node.g_min <= node.g_max);
        if node.status == NodeStatus::Closed {
            self.reopenings += 1;
        }
        node.status = NodeStatus::Open;
        node.open_seq = self.open.push(node.g_min + node.h, node.g_min, id);
    }

    fn is_live(nodes: &[NodeData], node: u32, seq: u64) -> bool {
        let n = &nodes[node as usize];
        n.status == NodeStatus::Open && n.open_seq == seq
    }

    /// Runs until a goal node is popped (returns its id) or OPEN empties.
    pub fn run(
        &mut self,
        cache: &mut BoundCache<'_>,
        policy: &mut dyn EdgePolicy,
    ) -> Result<Option<u32>, EstimationError> {
        let root = self.lookup_or_insert(self.task.initial().clone());
        {
            let node = &mut self.nodes[root as usize];
            node.g_min = 0.0;
            node.g_max = 0.0;
        }
        if self.nodes[root as usize].h.is_infinite() {
            return Ok(None);
        }
        self.enqueue(root);
        let mut applicable = Vec::new();
        loop {
            let nodes = &self.nodes;
            let Some(entry) = self.open.pop(|e| Self::is_live(nodes, e.node, e.seq)) else {
                return Ok(None);
            };
            let id = entry.node;
            if self.task.is_goal(&self.states[id as usize]) {
                self.nodes[id as usize].status = NodeStatus::Closed;
                return Ok(Some(id));
            }
            self.nodes[id as usize].status = NodeStatus::Closed;
            self.expansions += 1;
            let parent_g = (self.nodes[id as usize].g_min, self.nodes[id as usize].g_max);
            self.generator.applicable_actions(self.task, &self.states[id as usize], &mut applicable);
            for &action in &applicable {
                let next = apply_unchecked(&self.states[id as usize], self.task.action(action));
                let succ = self.lookup_or_insert(next);
                self.generations += 1;
                if self.nodes[succ as usize].h.is_infinite() {
                    continue;
                }
                let succ_g_min = self.nodes[succ as usize].g_min;
                let arrival = policy.arrival(cache, action, parent_g, succ_g_min)?;
                let node = &mut self.nodes[succ as usize];
                if arrival.g_lo < node.g_min {
                    node.alt_arrival = node.alt_arrival.min(node.g_min);
                    node.g_min = arrival.g_lo;
                    node.g_max = arrival.g_hi;
                    node.parent = Some((id, action));
                    node.edge = arrival.edge;
                    self.enqueue(succ);
                } else {
                    node.alt_arrival = node.alt_arrival.min(arrival.g_lo);
                }
            }
        }
    }

    /// Actions, states and edge intervals from the root to `id`.
    pub fn trace(&self, id: u32) -> Vec<(ActionId, u32, Interval)> {
        let mut steps = Vec::new();
        let mut cur = id;
        while let Some((parent, action)) = self.nodes[cur as usize].parent {
            steps.push((action, cur, self.nodes[cur as usize].edge));
            cur = parent;
        }
        steps.reverse();
        steps
    }

    /// Best live OPEN entry as `(g_min, f)`.
    pub fn best_open(&mut self) -> Option<(Cost, Cost)> {
        let nodes = &self.nodes;
        self.open.peek(|e| Self::is_live(nodes, e.node, e.seq)).map(|e| (e.g_min, e.f))
    }
}
