#![allow(dead_code)]

use std::path::PathBuf;

use estplan::bench::{load_corpus, random_task, BenchTask, RandomTaskParams};
use estplan::oracle::{uniform_cost_search, DEFAULT_STATE_CAP};

/// Random tasks with a non-empty goal, named `random-<seed>`, from seeds
/// starting at `first_seed`.
pub fn random_tasks(params: &RandomTaskParams, first_seed: u64, count: usize) -> Vec<BenchTask> {
    let mut out = Vec::with_capacity(count);
    let mut seed = first_seed;
    while out.len() < count {
        let (task, base_costs) = random_task(params, seed);
        if !task.goal().is_empty() {
            out.push(BenchTask { name: format!("random-{seed}"), task, base_costs });
        }
        seed += 1;
    }
    out
}

/// Larger tasks, closer to what the search sees on benchmark instances.
pub fn wide_params() -> RandomTaskParams {
    RandomTaskParams {
        atoms: 16,
        actions: 250,
        max_pre: 3,
        max_add: 2,
        max_del: 2,
        max_cost: 10,
        goal_size: 3,
        walk_length: 14,
    }
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Solvable tasks of the repository corpus.
pub fn repo_corpus() -> Vec<BenchTask> {
    load_corpus(&corpus_dir())
        .expect("corpus loads")
        .into_iter()
        .filter(|t| {
            uniform_cost_search(&t.task, &t.base_costs, DEFAULT_STATE_CAP).map(|s| s.cost.is_finite()).unwrap_or(false)
        })
        .collect()
}

/// Optimal cost under `costs`.
pub fn optimal(task: &BenchTask, costs: &[f64]) -> f64 {
    uniform_cost_search(&task.task, costs, DEFAULT_STATE_CAP).expect("within the state cap").cost
}
