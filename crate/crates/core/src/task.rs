//! Propositional planning tasks: atoms, states, ground actions and plans.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense index of a propositional atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomId(pub u32);

/// Dense index of a ground action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub u32);

impl AtomId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TaskError {
    #[error("duplicate atom name `{0}`")]
    DuplicateAtom(String),
    #[error("duplicate action name `{0}`")]
    DuplicateAction(String),
    #[error("action `{action}` references atom id {atom}, but the task has {count} atoms")]
    AtomOutOfRange { action: String, atom: u32, count: usize },
    #[error("goal references atom id {atom}, but the task has {count} atoms")]
    GoalOutOfRange { atom: u32, count: usize },
    #[error("action `{action}` both adds and deletes atom `{atom}`")]
    AddDeleteOverlap { action: String, atom: String },
    #[error("initial state has width {width}, expected {count}")]
    InitialWidth { width: usize, count: usize },
    #[error("action ids must be dense: position {position} holds id {id}")]
    NonDenseActionId { position: usize, id: u32 },
    #[error("action `{action}` is not applicable")]
    NotApplicable { action: String },
    #[error("plan step {step} references unknown action id {id}")]
    UnknownAction { step: usize, id: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub id: AtomId,
    pub name: String,
}

/// Full truth assignment over the task's atoms, stored as a packed bit vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct State {
    words: Box<[u64]>,
    width: usize,
}

impl State {
    pub fn empty(width: usize) -> Self {
        State { words: vec![0; width.div_ceil(64)].into_boxed_slice(), width }
    }

    pub fn from_atoms(width: usize, atoms: impl IntoIterator<Item = AtomId>) -> Self {
        let mut state = State::empty(width);
        for atom in atoms {
            state.set(atom, true);
        }
        state
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn holds(&self, atom: AtomId) -> bool {
        let i = atom.index();
        debug_assert!(i < self.width);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, atom: AtomId, value: bool) {
        let i = atom.index();
        assert!(i < self.width, "atom {i} outside state of width {}", self.width);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    /// Iterates over the atoms that are true, in increasing id order.
    pub fn true_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros();
                bits &= bits - 1;
                Some(AtomId((w * 64) as u32 + tz))
            })
        })
    }

    pub fn contains_all(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|&a| self.holds(a))
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.true_atoms().map(|a| a.0)).finish()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundAction {
    pub id: ActionId,
    pub name: String,
    pub pre: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
}

impl GroundAction {
    pub fn new(
        id: ActionId,
        name: impl Into<String>,
        pre: impl IntoIterator<Item = AtomId>,
        add: impl IntoIterator<Item = AtomId>,
        del: impl IntoIterator<Item = AtomId>,
    ) -> Self {
        GroundAction { id, name: name.into(), pre: sorted_set(pre), add: sorted_set(add), del: sorted_set(del) }
    }
}

fn sorted_set(atoms: impl IntoIterator<Item = AtomId>) -> Vec<AtomId> {
    let mut v: Vec<AtomId> = atoms.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Sequence of ground action ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan {
    pub actions: Vec<ActionId>,
}

impl Plan {
    pub fn new(actions: Vec<ActionId>) -> Self {
        Plan { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// An immutable STRIPS task with a conjunctive goal.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTask {
    atoms: Vec<Atom>,
    actions: Vec<GroundAction>,
    initial: State,
    goal: Vec<AtomId>,
}

impl GroundTask {
    /// Builds a task, checking every structural invariant.
    pub fn new(
        atom_names: Vec<String>,
        actions: Vec<GroundAction>,
        initial: State,
        goal: Vec<AtomId>,
    ) -> Result<Self, TaskError> {
        let count = atom_names.len();
        let mut seen = HashSet::with_capacity(count);
        for name in &atom_names {
            if !seen.insert(name.as_str()) {
                return Err(TaskError::DuplicateAtom(name.clone()));
            }
        }
        if initial.width() != count {
            return Err(TaskError::InitialWidth { width: initial.width(), count });
        }
        let mut action_names = HashSet::with_capacity(actions.len());
        for (position, action) in actions.iter().enumerate() {
            if action.id.index() != position {
                return Err(TaskError::NonDenseActionId { position, id: action.id.0 });
            }
            if !action_names.insert(action.name.as_str()) {
                return Err(TaskError::DuplicateAction(action.name.clone()));
            }
            for &atom in action.pre.iter().chain(&action.add).chain(&action.del) {
                if atom.index() >= count {
                    return Err(TaskError::AtomOutOfRange { action: action.name.clone(), atom: atom.0, count });
                }
            }
            if let Some(&atom) = action.add.iter().find(|a| action.del.binary_search(a).is_ok()) {
                return Err(TaskError::AddDeleteOverlap {
                    action: action.name.clone(),
                    atom: atom_names[atom.index()].clone(),
                });
            }
        }
        let goal = sorted_set(goal);
        if let Some(&atom) = goal.iter().find(|a| a.index() >= count) {
            return Err(TaskError::GoalOutOfRange { atom: atom.0, count });
        }
        let atoms = atom_names.into_iter().enumerate().map(|(i, name)| Atom { id: AtomId(i as u32), name }).collect();
        Ok(GroundTask { atoms, actions, initial, goal })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_name(&self, atom: AtomId) -> &str {
        &self.atoms[atom.index()].name
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id.index()]
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    pub fn goal(&self) -> &[AtomId] {
        &self.goal
    }

    pub fn is_goal(&self, state: &State) -> bool {
        state.contains_all(&self.goal)
    }

    /// Checks the plan against the task: `Ok(false)` if some step is not
    /// applicable or the final state misses a goal atom.
    pub fn validate_plan(&self, plan: &Plan) -> Result<bool, TaskError> {
        for (step, id) in plan.actions.iter().enumerate() {
            if id.index() >= self.actions.len() {
                return Err(TaskError::UnknownAction { step, id: id.0 });
            }
        }
        let mut state = self.initial.clone();
        for id in &plan.actions {
            let action = self.action(*id);
            if !applicable(&state, action) {
                return Ok(false);
            }
            state = apply_unchecked(&state, action);
        }
        Ok(self.is_goal(&state))
    }

    /// Final state reached by the plan, or an error naming the first
    /// inapplicable step.
    pub fn simulate(&self, plan: &Plan) -> Result<State, TaskError> {
        let mut state = self.initial.clone();
        for (step, id) in plan.actions.iter().enumerate() {
            let action = self.actions.get(id.index()).ok_or(TaskError::UnknownAction { step, id: id.0 })?;
            state = apply(&state, action)?;
        }
        Ok(state)
    }
}

#[inline]
pub fn applicable(state: &State, action: &GroundAction) -> bool {
    state.contains_all(&action.pre)
}

/// Successor state `(state \ del) ∪ add`.
pub fn apply(state: &State, action: &GroundAction) -> Result<State, TaskError> {
    if !applicable(state, action) {
        return Err(TaskError::NotApplicable { action: action.name.clone() });
    }
    Ok(apply_unchecked(state, action))
}

pub(crate) fn apply_unchecked(state: &State, action: &GroundAction) -> State {
    let mut next = state.clone();
    for &a in &action.del {
        next.set(a, false);
    }
    for &a in &action.add {
        next.set(a, true);
    }
    next
}

/// Finds applicable actions by bucketing them on their first precondition atom.
#[derive(Clone, Debug)]
pub struct SuccessorGenerator {
    unconditional: Vec<ActionId>,
    by_atom: Vec<Vec<ActionId>>,
}

impl SuccessorGenerator {
    pub fn new(task: &GroundTask) -> Self {
        let mut unconditional = Vec::new();
        let mut by_atom = vec![Vec::new(); task.atom_count()];
        for action in task.actions() {
            match action.pre.first() {
                None => unconditional.push(action.id),
                Some(&atom) => by_atom[atom.index()].push(action.id),
            }
        }
        SuccessorGenerator { unconditional, by_atom }
    }

    /// Applicable actions in `state`, sorted by id.
    pub fn applicable_actions(&self, task: &GroundTask, state: &State, out: &mut Vec<ActionId>) {
        out.clear();
        out.extend_from_slice(&self.unconditional);
        for atom in state.true_atoms() {
            for &id in &self.by_atom[atom.index()] {
                if applicable(state, task.action(id)) {
                    out.push(id);
                }
            }
        }
        out.sort_unstable();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<AtomId> {
        v.iter().map(|&i| AtomId(i)).collect()
    }

    // atoms: p=0, q=1, r=2
    fn state(v: &[u32]) -> State {
        State::from_atoms(3, ids(v))
    }

    fn action(pre: &[u32], add: &[u32], del: &[u32]) -> GroundAction {
        GroundAction::new(ActionId(0), "a", ids(pre), ids(add), ids(del))
    }

    #[test]
    fn applicable_examples() {
        assert!(applicable(&state(&[0]), &action(&[0], &[], &[])));
        assert!(!applicable(&state(&[]), &action(&[0], &[], &[])));
        assert!(applicable(&state(&[0, 1]), &action(&[], &[], &[])));
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply(&state(&[0]), &action(&[0], &[1], &[0])).unwrap(), state(&[1]));
        assert_eq!(apply(&state(&[0]), &action(&[0], &[], &[])).unwrap(), state(&[0]));
        assert_eq!(apply(&state(&[0, 1]), &action(&[1], &[2], &[1])).unwrap(), state(&[0, 2]));
    }

    #[test]
    fn apply_rejects_inapplicable() {
        let err = apply(&state(&[]), &action(&[0], &[1], &[])).unwrap_err();
        assert!(matches!(err, TaskError::NotApplicable { .. }));
    }

    fn one_step_task(init: &[u32], goal: &[u32]) -> GroundTask {
        GroundTask::new(
            vec!["p".into(), "q".into(), "r".into()],
            vec![GroundAction::new(ActionId(0), "p-to-q", ids(&[0]), ids(&[1]), ids(&[0]))],
            state(init),
            ids(goal),
        )
        .unwrap()
    }

    #[test]
    fn validate_plan_examples() {
        assert!(one_step_task(&[0, 1], &[1]).validate_plan(&Plan::default()).unwrap());
        assert!(!one_step_task(&[0], &[1]).validate_plan(&Plan::default()).unwrap());
        assert!(one_step_task(&[0], &[1]).validate_plan(&Plan::new(vec![ActionId(0)])).unwrap());
        assert!(!one_step_task(&[2], &[1]).validate_plan(&Plan::new(vec![ActionId(0)])).unwrap());
    }

    #[test]
    fn validate_plan_rejects_unknown_id() {
        let task = one_step_task(&[0], &[1]);
        assert_eq!(
            task.validate_plan(&Plan::new(vec![ActionId(0), ActionId(7)])),
            Err(TaskError::UnknownAction { step: 1, id: 7 })
        );
    }

    #[test]
    fn construction_invariants() {
        let names = || vec!["p".to_string(), "q".to_string()];
        let err = GroundTask::new(vec!["p".into(), "p".into()], vec![], State::empty(2), vec![]).unwrap_err();
        assert_eq!(err, TaskError::DuplicateAtom("p".into()));

        let overlap = GroundAction::new(ActionId(0), "x", [], ids(&[0]), ids(&[0]));
        assert!(matches!(
            GroundTask::new(names(), vec![overlap], State::empty(2), vec![]),
            Err(TaskError::AddDeleteOverlap { .. })
        ));

        let wide = GroundAction::new(ActionId(0), "x", ids(&[5]), [], []);
        assert!(matches!(
            GroundTask::new(names(), vec![wide], State::empty(2), vec![]),
            Err(TaskError::AtomOutOfRange { atom: 5, .. })
        ));
        assert!(matches!(
            GroundTask::new(names(), vec![], State::empty(2), ids(&[2])),
            Err(TaskError::GoalOutOfRange { .. })
        ));
    }

    #[test]
    fn state_bits_cross_word_boundary() {
        let s = State::from_atoms(130, ids(&[0, 63, 64, 129]));
        assert_eq!(s.true_atoms().map(|a| a.0).collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert!(s.holds(AtomId(64)));
        assert!(!s.holds(AtomId(65)));
    }

    #[test]
    fn successor_generator_matches_scan() {
        let task = GroundTask::new(
            vec!["p".into(), "q".into(), "r".into()],
            vec![
                GroundAction::new(ActionId(0), "a", ids(&[0, 1]), ids(&[2]), []),
                GroundAction::new(ActionId(1), "b", [], ids(&[0]), []),
                GroundAction::new(ActionId(2), "c", ids(&[2]), [], ids(&[2])),
                GroundAction::new(ActionId(3), "d", ids(&[1]), [], []),
            ],
            state(&[0, 1]),
            vec![],
        )
        .unwrap();
        let generator = SuccessorGenerator::new(&task);
        let mut out = Vec::new();
        for bits in 0u32..8 {
            let s = State::from_atoms(3, (0..3).filter(|i| bits >> i & 1 == 1).map(AtomId));
            generator.applicable_actions(&task, &s, &mut out);
            let expected: Vec<ActionId> = task.actions().iter().filter(|a| applicable(&s, a)).map(|a| a.id).collect();
            assert_eq!(out, expected);
        }
    }
}
