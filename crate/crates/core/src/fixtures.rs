//! Small hand-built tasks shared by unit tests, integration tests and docs.

use crate::estimation::{EstimatorSet, EstimatorSpec, EstimatorTable};
use crate::oracle::CostOracleTable;
use crate::task::{ActionId, AtomId, GroundAction, GroundTask, State};

/// A task bundled with its estimators and true costs.
pub struct Fixture {
    pub task: GroundTask,
    pub estimators: EstimatorTable,
    pub oracle: CostOracleTable,
}

/// Four-state diamond `s0 → {a, b} → g`.
///
/// `s0→a` has tiers `[1,4]` then `[2,2]` (true cost 2); the other three edges
/// are exact: `s0→b` = 3, `a→g` = 1, `b→g` = 1. Optimal cost 3 via `a`.
pub struct Diamond {
    pub task: GroundTask,
    pub estimators: EstimatorTable,
    pub oracle: CostOracleTable,
    pub s0_a: ActionId,
    pub s0_b: ActionId,
    pub a_g: ActionId,
    pub b_g: ActionId,
}

fn spec(lo: f64, hi: f64, tau: f64) -> EstimatorSpec {
    EstimatorSpec::new(lo, hi, tau).expect("valid fixture tier")
}

fn move_action(id: u32, name: &str, from: u32, to: u32) -> GroundAction {
    GroundAction::new(ActionId(id), name, [AtomId(from)], [AtomId(to)], [AtomId(from)])
}

pub fn diamond() -> Diamond {
    let names = ["at-s0", "at-a", "at-b", "at-g"].map(String::from).to_vec();
    let actions = vec![
        move_action(0, "s0-a", 0, 1),
        move_action(1, "s0-b", 0, 2),
        move_action(2, "a-g", 1, 3),
        move_action(3, "b-g", 2, 3),
    ];
    let task = GroundTask::new(names, actions, State::from_atoms(4, [AtomId(0)]), vec![AtomId(3)])
        .expect("valid fixture task");
    let sets = vec![
        EstimatorSet::new(vec![spec(1.0, 4.0, 0.0), spec(2.0, 2.0, 1.0)]).unwrap(),
        EstimatorSet::exact(3.0),
        EstimatorSet::exact(1.0),
        EstimatorSet::exact(1.0),
    ];
    let estimators = EstimatorTable::new(&task, sets).unwrap();
    let oracle = CostOracleTable::new(vec![2.0, 3.0, 1.0, 1.0], &estimators).unwrap();
    Diamond { task, estimators, oracle, s0_a: ActionId(0), s0_b: ActionId(1), a_g: ActionId(2), b_g: ActionId(3) }
}

/// Goal atom has no achiever.
pub fn unsolvable() -> Fixture {
    let names = ["p", "q", "goal"].map(String::from).to_vec();
    let actions = vec![move_action(0, "p-q", 0, 1), move_action(1, "q-p", 1, 0)];
    let task = GroundTask::new(names, actions, State::from_atoms(3, [AtomId(0)]), vec![AtomId(2)]).unwrap();
    let estimators = EstimatorTable::exact(&[1.0, 1.0]);
    let oracle = CostOracleTable::new(vec![1.0, 1.0], &estimators).unwrap();
    Fixture { task, estimators, oracle }
}

/// Goal already holds initially.
pub fn already_solved() -> Fixture {
    let names = ["p", "q"].map(String::from).to_vec();
    let actions = vec![move_action(0, "p-q", 0, 1)];
    let task = GroundTask::new(names, actions, State::from_atoms(2, [AtomId(0)]), vec![AtomId(0)]).unwrap();
    let estimators = EstimatorTable::exact(&[1.0]);
    let oracle = CostOracleTable::new(vec![1.0], &estimators).unwrap();
    Fixture { task, estimators, oracle }
}

/// Chain `p0 → p1 → … → pn` where every step has the same tier list and
/// true cost.
pub fn chain(steps: usize, tiers: &[(f64, f64)], true_cost: f64) -> Fixture {
    let names = (0..=steps).map(|i| format!("p{i}")).collect();
    let actions = (0..steps).map(|i| move_action(i as u32, &format!("step{i}"), i as u32, i as u32 + 1)).collect();
    let task =
        GroundTask::new(names, actions, State::from_atoms(steps + 1, [AtomId(0)]), vec![AtomId(steps as u32)]).unwrap();
    let set = EstimatorSet::new(tiers.iter().enumerate().map(|(i, &(l, h))| spec(l, h, i as f64)).collect()).unwrap();
    let estimators = EstimatorTable::new(&task, vec![set; steps]).unwrap();
    let oracle = CostOracleTable::new(vec![true_cost; steps], &estimators).unwrap();
    Fixture { task, estimators, oracle }
}
