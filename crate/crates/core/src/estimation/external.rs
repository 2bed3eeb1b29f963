//! Line-protocol client for out-of-process cost estimators.
//!
//! Request, one per call: `ESTIMATE <action_name> <tier>\n` (tier is 0-based).
//! Response: `<lo> <hi>\n`, two decimal numbers separated by whitespace.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use thiserror::Error;

use super::{CostSource, EstimationError, EstimatorSpec, Interval};
use crate::task::ActionId;

pub const DEFAULT_EXTERNAL_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("malformed response {0:?}")]
    Malformed(String),
    #[error("response bounds reversed: {lo} > {hi}")]
    ReversedBounds { lo: f64, hi: f64 },
    #[error("no response within {0:?}")]
    Timeout(Duration),
    #[error("estimator process exited")]
    Exited,
    #[error("i/o error talking to estimator process: {0}")]
    Io(#[from] io::Error),
}

/// Parses one response line.
pub fn parse_response(line: &str) -> Result<Interval, ExternalError> {
    let mut fields = line.split_whitespace();
    let (Some(lo), Some(hi), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(ExternalError::Malformed(line.to_string()));
    };
    let parse = |s: &str| -> Result<f64, ExternalError> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| ExternalError::Malformed(line.to_string()))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(ExternalError::ReversedBounds { lo, hi });
    }
    Ok(Interval { lo, hi })
}

/// A spawned estimator process. Requests are serialized; a reader thread
/// forwards response lines so every call can be bounded by a timeout.
pub struct ExternalSource {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<io::Result<String>>,
    action_names: Vec<String>,
    timeout: Duration,
    dead: bool,
}

impl ExternalSource {
    pub fn spawn(mut command: Command, action_names: Vec<String>, timeout: Duration) -> io::Result<Self> {
        let mut child = command.stdin(Stdio::piped()).stdout(Stdio::piped()).spawn()?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalSource { child, stdin, lines: rx, action_names, timeout, dead: false })
    }

    /// Sends one request and waits for its response line.
    pub fn request(&mut self, action_name: &str, tier: usize) -> Result<Interval, ExternalError> {
        if self.dead {
            return Err(ExternalError::Exited);
        }
        let result = self.round_trip(action_name, tier);
        if matches!(result, Err(ExternalError::Exited | ExternalError::Timeout(_) | ExternalError::Io(_))) {
            self.shut_down();
        }
        result
    }

    fn round_trip(&mut self, action_name: &str, tier: usize) -> Result<Interval, ExternalError> {
        let stdin = self.stdin.as_mut().ok_or(ExternalError::Exited)?;
        let sent = writeln!(stdin, "ESTIMATE {action_name} {tier}").and_then(|_| stdin.flush());
        if let Err(e) = sent {
            return Err(if e.kind() == io::ErrorKind::BrokenPipe { ExternalError::Exited } else { e.into() });
        }
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => parse_response(&line),
            Ok(Err(e)) => Err(e.into()),
            Err(RecvTimeoutError::Timeout) => Err(ExternalError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(ExternalError::Exited),
        }
    }

    fn shut_down(&mut self) {
        self.dead = true;
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for ExternalSource {
    fn drop(&mut self) {
        if !self.dead {
            self.shut_down();
        }
    }
}

impl CostSource for ExternalSource {
    fn estimate(&mut self, action: ActionId, tier: usize, _spec: &EstimatorSpec) -> Result<Interval, EstimationError> {
        let name = self.action_names[action.index()].clone();
        self.request(&name, tier).map_err(|source| EstimationError::External { action, tier, source })
    }
}
