//! Loading a benchmark corpus from disk.
//!
//! A directory containing `domain.pddl` contributes one task per other
//! `.pddl` file in it. Every `.json` file is read as a grounded task.
//! Directories are walked recursively; tasks are named by their path
//! relative to the root and returned sorted by name.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::BenchTask;
use crate::estimation::Cost;
use crate::ingest::{load_pddl, parse_native, IngestError, PddlError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Native { path: PathBuf, source: IngestError },
    #[error("{path}: {source}")]
    Pddl { path: PathBuf, source: PddlError },
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

fn relative_name(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.with_extension("").to_string_lossy().replace('\\', "/")
}

/// Loads every task below `root`. A single file is also accepted.
pub fn load_corpus(root: &Path) -> Result<Vec<BenchTask>, CorpusError> {
    let mut out = Vec::new();
    if root.is_file() {
        let base = root.parent().unwrap_or(Path::new(""));
        load_native(base, root, &mut out)?;
    } else {
        walk(root, root, &mut out)?;
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<BenchTask>) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io { path: dir.to_path_buf(), source };
    let mut entries: Vec<PathBuf> =
        fs::read_dir(dir).map_err(io_err)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().map_err(io_err)?;
    entries.sort();
    let domain = dir.join("domain.pddl");
    let domain_text = if domain.is_file() { Some(read(&domain)?) } else { None };
    for path in entries {
        if path.is_dir() {
            walk(root, &path, out)?;
            continue;
        }
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => load_native(root, &path, out)?,
            Some("pddl") if path != domain => {
                let Some(domain_text) = &domain_text else {
                    log::warn!("{}: no domain.pddl next to it, skipped", path.display());
                    continue;
                };
                let problem = read(&path)?;
                let loaded = load_pddl(domain_text, &problem, true)
                    .map_err(|source| CorpusError::Pddl { path: path.clone(), source })?;
                out.push(BenchTask { name: relative_name(root, &path), task: loaded.task, base_costs: loaded.costs });
            }
            _ => {}
        }
    }
    Ok(())
}

fn load_native(root: &Path, path: &Path, out: &mut Vec<BenchTask>) -> Result<(), CorpusError> {
    let text = read(path)?;
    let native =
        parse_native(&text, false).map_err(|source| CorpusError::Native { path: path.to_path_buf(), source })?;
    let base_costs: Vec<Cost> = match &native.oracle {
        Some(oracle) => oracle.costs().to_vec(),
        None => native.estimators.sets().iter().map(|s| s.tiers()[0].c_min).collect(),
    };
    out.push(BenchTask { name: relative_name(root, path), task: native.task, base_costs });
    Ok(())
}
