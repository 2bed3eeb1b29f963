//! Task readers: the grounded JSON format and a typed STRIPS subset of PDDL
//! with action costs.

pub mod native;
pub mod pddl;

use thiserror::Error;

use crate::estimation::SpecError;
use crate::oracle::OracleError;
use crate::task::TaskError;

pub use native::{emit_native, parse_native, NativeDocument, NativeTask};
pub use pddl::{ground, load_pddl, parse_pddl, GroundedAction, LiftedTask, PddlError, PddlTask};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{path}: unknown key `{key}`")]
    UnknownKey { path: String, key: String },
    #[error("{path}: unknown atom `{name}`")]
    UnknownAtom { path: String, name: String },
    #[error("{path}: {source}")]
    Tier { path: String, source: SpecError },
    #[error("{path}: {source}")]
    Task { path: String, source: TaskError },
    #[error("true_cost given for {given} of {actions} actions; give it for all or none")]
    PartialTrueCosts { given: usize, actions: usize },
    #[error("true costs: {0}")]
    Oracle(#[from] OracleError),
}

impl From<serde_json::Error> for IngestError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep the bare message.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        IngestError::Json { line: e.line(), column: e.column(), message }
    }
}
