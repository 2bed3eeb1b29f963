//! Grounded JSON task format.
//!
//! ```json
//! {
//!   "atoms": ["at-a", "at-b"],
//!   "init": ["at-a"],
//!   "goal": ["at-b"],
//!   "actions": [
//!     {"name": "move", "pre": ["at-a"], "add": ["at-b"], "del": ["at-a"],
//!      "estimators": [{"cmin": 1, "cmax": 4, "tau_ms": 0}, {"cmin": 2, "cmax": 2, "tau_ms": 5}],
//!      "true_cost": 2}
//!   ]
//! }
//! ```
//!
//! `pre`, `add`, `del` and `tau_ms` default to empty / zero. `true_cost` is
//! optional but must then be given for every action.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IngestError;
use crate::estimation::{EstimatorSet, EstimatorSpec, EstimatorTable};
use crate::oracle::CostOracleTable;
use crate::task::{ActionId, AtomId, GroundAction, GroundTask, State};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NativeDocument {
    pub atoms: Vec<String>,
    pub init: Vec<String>,
    pub goal: Vec<String>,
    pub actions: Vec<NativeAction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NativeAction {
    pub name: String,
    #[serde(default)]
    pub pre: Vec<String>,
    #[serde(default)]
    pub add: Vec<String>,
    #[serde(default)]
    pub del: Vec<String>,
    pub estimators: Vec<NativeTier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_cost: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NativeTier {
    pub cmin: f64,
    pub cmax: f64,
    #[serde(default)]
    pub tau_ms: f64,
}

/// Everything a native document describes. The oracle table is only present
/// when the document carries true costs.
#[derive(Clone, Debug)]
pub struct NativeTask {
    pub task: GroundTask,
    pub estimators: EstimatorTable,
    pub oracle: Option<CostOracleTable>,
}

const TOP_KEYS: &[&str] = &["atoms", "init", "goal", "actions"];
const ACTION_KEYS: &[&str] = &["name", "pre", "add", "del", "estimators", "true_cost"];
const TIER_KEYS: &[&str] = &["cmin", "cmax", "tau_ms"];

fn check_keys(value: &Value, allowed: &[&str], path: &str) -> Result<(), IngestError> {
    if let Value::Object(map) = value {
        if let Some(key) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(IngestError::UnknownKey { path: path.to_string(), key: key.clone() });
        }
    }
    Ok(())
}

fn reject_unknown_keys(root: &Value) -> Result<(), IngestError> {
    check_keys(root, TOP_KEYS, "$")?;
    let Some(Value::Array(actions)) = root.get("actions") else {
        return Ok(());
    };
    for (i, action) in actions.iter().enumerate() {
        let path = format!("actions[{i}]");
        check_keys(action, ACTION_KEYS, &path)?;
        if let Some(Value::Array(tiers)) = action.get("estimators") {
            for (j, tier) in tiers.iter().enumerate() {
                check_keys(tier, TIER_KEYS, &format!("{path}.estimators[{j}]"))?;
            }
        }
    }
    Ok(())
}

/// Parses and validates a document. With `lenient`, unknown keys are ignored.
pub fn parse_native(text: &str, lenient: bool) -> Result<NativeTask, IngestError> {
    let value: Value = serde_json::from_str(text)?;
    if !lenient {
        reject_unknown_keys(&value)?;
    }
    // Re-parse from text so type errors keep line and column information.
    let doc: NativeDocument = serde_json::from_str(text)?;
    build(&doc)
}

fn lookup(
    index: &HashMap<&str, AtomId>,
    names: &[String],
    path: impl Fn() -> String,
) -> Result<Vec<AtomId>, IngestError> {
    names
        .iter()
        .map(|n| {
            index.get(n.as_str()).copied().ok_or_else(|| IngestError::UnknownAtom { path: path(), name: n.clone() })
        })
        .collect()
}

pub fn build(doc: &NativeDocument) -> Result<NativeTask, IngestError> {
    let mut index = HashMap::with_capacity(doc.atoms.len());
    for (i, name) in doc.atoms.iter().enumerate() {
        if index.insert(name.as_str(), AtomId(i as u32)).is_some() {
            return Err(IngestError::Task {
                path: "atoms".into(),
                source: crate::task::TaskError::DuplicateAtom(name.clone()),
            });
        }
    }
    let init = lookup(&index, &doc.init, || "init".into())?;
    let goal = lookup(&index, &doc.goal, || "goal".into())?;
    let mut actions = Vec::with_capacity(doc.actions.len());
    let mut sets = Vec::with_capacity(doc.actions.len());
    let with_cost = doc.actions.iter().filter(|a| a.true_cost.is_some()).count();
    if with_cost != 0 && with_cost != doc.actions.len() {
        return Err(IngestError::PartialTrueCosts { given: with_cost, actions: doc.actions.len() });
    }
    for (i, a) in doc.actions.iter().enumerate() {
        let path = |field: &str| format!("actions[{i}].{field}");
        let pre = lookup(&index, &a.pre, || path("pre"))?;
        let add = lookup(&index, &a.add, || path("add"))?;
        let del = lookup(&index, &a.del, || path("del"))?;
        actions.push(GroundAction::new(ActionId(i as u32), a.name.clone(), pre, add, del));
        let mut tiers = Vec::with_capacity(a.estimators.len());
        for (j, t) in a.estimators.iter().enumerate() {
            let spec = EstimatorSpec::new(t.cmin, t.cmax, t.tau_ms)
                .map_err(|source| IngestError::Tier { path: format!("actions[{i}].estimators[{j}]"), source })?;
            tiers.push(spec);
        }
        let set = EstimatorSet::new(tiers).map_err(|source| IngestError::Tier { path: path("estimators"), source })?;
        sets.push(set);
    }
    let initial = State::from_atoms(doc.atoms.len(), init);
    let task = GroundTask::new(doc.atoms.clone(), actions, initial, goal)
        .map_err(|source| IngestError::Task { path: "$".into(), source })?;
    let estimators = EstimatorTable::new(&task, sets).expect("one set per action");
    let oracle = if with_cost == 0 {
        None
    } else {
        let costs = doc.actions.iter().map(|a| a.true_cost.expect("checked above")).collect();
        Some(CostOracleTable::new(costs, &estimators)?)
    };
    Ok(NativeTask { task, estimators, oracle })
}

/// Inverse of [`build`].
pub fn to_document(task: &GroundTask, estimators: &EstimatorTable, oracle: Option<&CostOracleTable>) -> NativeDocument {
    let names = |atoms: &[AtomId]| atoms.iter().map(|&a| task.atom_name(a).to_string()).collect();
    NativeDocument {
        atoms: task.atoms().iter().map(|a| a.name.clone()).collect(),
        init: task.initial().true_atoms().map(|a| task.atom_name(a).to_string()).collect(),
        goal: names(task.goal()),
        actions: task
            .actions()
            .iter()
            .map(|a| NativeAction {
                name: a.name.clone(),
                pre: names(&a.pre),
                add: names(&a.add),
                del: names(&a.del),
                estimators: estimators
                    .set(a.id)
                    .tiers()
                    .iter()
                    .map(|t| NativeTier { cmin: t.c_min, cmax: t.c_max, tau_ms: t.tau_ms })
                    .collect(),
                true_cost: oracle.map(|o| o.cost(a.id)),
            })
            .collect(),
    }
}

pub fn emit_native(task: &GroundTask, estimators: &EstimatorTable, oracle: Option<&CostOracleTable>) -> String {
    let mut text = serde_json::to_string_pretty(&to_document(task, estimators, oracle)).expect("serializable");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::diamond;

    const MINIMAL: &str = r#"{"atoms": ["g"], "init": [], "goal": ["g"],
        "actions": [{"name": "a", "add": ["g"], "estimators": [{"cmin": 1, "cmax": 1}]}]}"#;

    #[test]
    fn minimal_document() {
        let t = parse_native(MINIMAL, false).unwrap();
        assert_eq!(t.task.action_count(), 1);
        assert!(t.oracle.is_none());
    }

    #[test]
    fn reversed_tier_is_rejected() {
        let text = MINIMAL.replace(r#""cmin": 1, "cmax": 1"#, r#""cmin": 3, "cmax": 2"#);
        let err = parse_native(&text, false).unwrap_err();
        assert!(err.to_string().contains("cmin exceeds cmax"), "{err}");
        assert!(err.to_string().contains("actions[0].estimators[0]"), "{err}");
    }

    #[test]
    fn negative_bound_and_unknown_atom() {
        let text = MINIMAL.replace(r#""cmin": 1"#, r#""cmin": -1"#);
        assert!(matches!(parse_native(&text, false), Err(IngestError::Tier { .. })));
        let text = MINIMAL.replace(r#""add": ["g"]"#, r#""add": ["h"]"#);
        let err = parse_native(&text, false).unwrap_err();
        assert!(matches!(&err, IngestError::UnknownAtom { name, .. } if name == "h"));
    }

    #[test]
    fn unknown_keys_strict_and_lenient() {
        let text = MINIMAL.replace(r#""name": "a","#, r#""name": "a", "colour": 1,"#);
        let err = parse_native(&text, false).unwrap_err();
        assert!(matches!(&err, IngestError::UnknownKey { key, .. } if key == "colour"));
        assert!(parse_native(&text, true).is_ok());
    }

    #[test]
    fn json_errors_carry_position() {
        let err = parse_native("{\n  \"atoms\": 3\n}", false).unwrap_err();
        assert!(matches!(err, IngestError::Json { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn partial_true_costs_are_rejected() {
        let text = r#"{"atoms": ["g"], "init": [], "goal": ["g"], "actions": [
            {"name": "a", "add": ["g"], "estimators": [{"cmin": 1, "cmax": 1}], "true_cost": 1},
            {"name": "b", "add": ["g"], "estimators": [{"cmin": 1, "cmax": 1}]}]}"#;
        assert!(matches!(parse_native(text, false), Err(IngestError::PartialTrueCosts { .. })));
    }

    #[test]
    fn round_trip() {
        let d = diamond();
        let text = emit_native(&d.task, &d.estimators, Some(&d.oracle));
        let parsed = parse_native(&text, false).unwrap();
        assert_eq!(parsed.task, d.task);
        assert_eq!(parsed.estimators, d.estimators);
        assert_eq!(parsed.oracle.as_ref(), Some(&d.oracle));
        assert_eq!(emit_native(&parsed.task, &parsed.estimators, parsed.oracle.as_ref()), text);
    }
}
