//! Experiment harness: synthetic estimators over a task corpus, a parameter
//! grid, per-run records, CSV output and aggregate tables.

pub mod corpus;
pub mod generator;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::estimation::{BoundCache, Cost, TableSource};
use crate::heuristics::HeuristicKind;
use crate::oracle::{dijkstra_optimal, DEFAULT_STATE_CAP};
use crate::planner::{solve, Algorithm, PlannerConfig};
use crate::post_search::AltBound;
use crate::search::Status;
use crate::task::{GroundTask, Plan};

pub use corpus::{load_corpus, CorpusError};
pub use generator::{
    random_task, synthesize_estimators, GeneratorError, RandomTaskParams, SplitMix64, TierProbabilities,
};

/// A corpus entry: a task and the base cost of each action.
#[derive(Clone, Debug)]
pub struct BenchTask {
    pub name: String,
    pub task: GroundTask,
    pub base_costs: Vec<Cost>,
}

/// One run of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantConfig {
    pub epsilon: f64,
    pub probs: TierProbabilities,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub heuristic: HeuristicKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub epsilons: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub heuristics: Vec<HeuristicKind>,
}

impl Grid {
    /// Every configuration, in a fixed nesting order.
    pub fn variants(&self) -> Vec<VariantConfig> {
        let mut out = Vec::new();
        for &seed in &self.seeds {
            for &p1 in &self.p1 {
                for &p2 in &self.p2 {
                    for &p3 in &self.p3 {
                        for &heuristic in &self.heuristics {
                            for &algorithm in &self.algorithms {
                                for &epsilon in &self.epsilons {
                                    out.push(VariantConfig {
                                        epsilon,
                                        probs: TierProbabilities { p1, p2, p3 },
                                        seed,
                                        algorithm,
                                        heuristic,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchOptions {
    /// Latency assigned to the expensive tiers.
    pub tau_ms: f64,
    pub simulate_latency: bool,
    /// Record measured wall time; off by default so output is reproducible.
    pub record_wall_time: bool,
    /// Also solve every variant optimally on the true costs.
    pub compute_optimal: bool,
    pub ese_alt: AltBound,
    pub state_cap: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            tau_ms: 1.0,
            simulate_latency: false,
            record_wall_time: false,
            compute_optimal: false,
            ese_alt: AltBound::GMin,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub task: String,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub heuristic: HeuristicKind,
    pub epsilon: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub success: bool,
    pub eta_eff: f64,
    pub expansions: u64,
    pub cheap_calls: u64,
    pub expensive_calls: u64,
    pub max_expensive: u64,
    pub ese_invoked: bool,
    pub ese_success: bool,
    pub ese_calls: u64,
    pub ese_expensive_calls: u64,
    /// Ratio the search itself returned, before any refinement.
    pub search_eta: f64,
    pub wall_ms: f64,
    pub est_ms: f64,
    pub status: Option<Status>,
    pub plan: Option<Plan>,
    /// True cost of the returned plan.
    pub plan_cost: Option<Cost>,
    pub optimal_cost: Option<Cost>,
    pub error: Option<String>,
}

impl BenchRecord {
    fn blank(task: &str, config: &VariantConfig) -> Self {
        BenchRecord {
            task: task.to_string(),
            seed: config.seed,
            algorithm: config.algorithm,
            heuristic: config.heuristic,
            epsilon: config.epsilon,
            p1: config.probs.p1,
            p2: config.probs.p2,
            p3: config.probs.p3,
            success: false,
            eta_eff: f64::NAN,
            expansions: 0,
            cheap_calls: 0,
            expensive_calls: 0,
            max_expensive: 0,
            ese_invoked: false,
            ese_success: false,
            ese_calls: 0,
            ese_expensive_calls: 0,
            search_eta: f64::NAN,
            wall_ms: 0.0,
            est_ms: 0.0,
            status: None,
            plan: None,
            plan_cost: None,
            optimal_cost: None,
            error: None,
        }
    }

    /// Expensive calls made as a fraction of those available; `None` when
    /// no expensive tier was available at all.
    pub fn expensive_ratio(&self) -> Option<f64> {
        (self.max_expensive > 0).then(|| self.expensive_calls as f64 / self.max_expensive as f64)
    }
}

/// Runs one configuration. Failures are recorded, never propagated.
pub fn run_variant(task: &BenchTask, config: &VariantConfig, options: &BenchOptions) -> BenchRecord {
    let mut record = BenchRecord::blank(&task.name, config);
    let (table, oracle) = match synthesize_estimators(&task.base_costs, config.probs, config.seed, options.tau_ms) {
        Ok(pair) => pair,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let source = TableSource { simulate_latency: options.simulate_latency };
    let mut cache = BoundCache::new(&table, Box::new(source)).with_oracle(&oracle);
    let planner = PlannerConfig {
        algorithm: config.algorithm,
        heuristic: config.heuristic,
        epsilon: config.epsilon,
        ese_alt: options.ese_alt,
    };
    let report = match solve(&task.task, &mut cache, &planner) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let r = &report.result;
    record.success = r.status == Status::EpsilonOk;
    record.eta_eff = r.eta_eff;
    record.search_eta = report.ese.as_ref().map_or(r.eta_eff, |e| e.eta_before);
    record.expansions = r.stats.expansions;
    record.cheap_calls = r.stats.cheap_calls;
    record.expensive_calls = r.stats.expensive_calls;
    record.max_expensive = r.stats.max_expensive_calls;
    if let Some(ese) = &report.ese {
        record.ese_invoked = ese.invoked;
        record.ese_success = ese.success;
        record.ese_calls = ese.calls;
        record.ese_expensive_calls = ese.expensive_calls;
    }
    record.est_ms = cache.stats().simulated_ms;
    if options.record_wall_time {
        record.wall_ms = r.stats.wall_ms;
    }
    record.status = Some(r.status);
    record.plan_cost = r.plan.as_ref().map(|p| oracle.plan_cost(p));
    record.plan = r.plan.clone();
    if options.compute_optimal {
        match dijkstra_optimal(&task.task, &oracle, options.state_cap) {
            Ok(opt) => record.optimal_cost = Some(opt.cost),
            Err(e) => record.error = Some(e.to_string()),
        }
    }
    record
}

/// Runs every grid configuration on every task in parallel. Records come
/// back ordered by task, then by the grid's nesting order.
pub fn run_grid(tasks: &[BenchTask], grid: &Grid, options: &BenchOptions) -> Vec<BenchRecord> {
    let variants = grid.variants();
    let jobs: Vec<(&BenchTask, &VariantConfig)> =
        tasks.iter().flat_map(|t| variants.iter().map(move |v| (t, v))).collect();
    jobs.par_iter().map(|(t, v)| run_variant(t, v, options)).collect()
}

pub const CSV_HEADER: &str = "task,seed,algorithm,heuristic,epsilon,p1,p2,p3,success,eta_eff,expansions,cheap_calls,expensive_calls,max_expensive,ese_invoked,ese_success,ese_calls,wall_ms,est_ms";

/// Shortest round-tripping decimal; `inf` and `nan` for the special values.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.task),
            r.seed,
            r.algorithm,
            r.heuristic,
            format_number(r.epsilon),
            format_number(r.p1),
            format_number(r.p2),
            format_number(r.p3),
            r.success,
            format_number(r.eta_eff),
            r.expansions,
            r.cheap_calls,
            r.expensive_calls,
            r.max_expensive,
            r.ese_invoked,
            r.ese_success,
            r.ese_calls,
            format_number(r.wall_ms),
            format_number(r.est_ms),
        );
    }
    out
}

/// Wall time plus a nominal latency per expensive call.
pub fn projected_runtime(record: &BenchRecord, tau_per_expensive_ms: f64) -> f64 {
    record.wall_ms + record.expensive_calls as f64 * tau_per_expensive_ms
}

/// Partial derivatives of `η = (N + α) / (D + β)` with respect to `α` and `β`.
pub fn ratio_partials(n: f64, d: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let denom = d + beta;
    (1.0 / denom, -(n + alpha) / (denom * denom))
}

/// Checks the marginal-return analysis of `η = (N + α) / (D + β)`:
/// (a) the closed-form partial derivatives agree with central finite
/// differences to a relative tolerance of 1e-6, and (b) improving `α` twice
/// by the factor `δ` yields a strictly smaller second change in `η`.
pub fn diminishing_marginal_check(n: f64, d: f64, alpha: f64, beta: f64, delta: f64) -> bool {
    let eta = |a: f64, b: f64| (n + a) / (d + b);
    let (d_alpha, d_beta) = ratio_partials(n, d, alpha, beta);
    let h_a = 1e-5 * alpha.abs().max(1e-3);
    let h_b = 1e-5 * beta.abs().max(1e-3);
    let fd_alpha = (eta(alpha + h_a, beta) - eta(alpha - h_a, beta)) / (2.0 * h_a);
    let fd_beta = (eta(alpha, beta + h_b) - eta(alpha, beta - h_b)) / (2.0 * h_b);
    let close = |exact: f64, approx: f64| (exact - approx).abs() <= 1e-6 * exact.abs();
    let derivatives_ok = close(d_alpha, fd_alpha) && close(d_beta, fd_beta);
    let first = eta(alpha, beta) - eta(alpha / delta, beta);
    let second = eta(alpha / delta, beta) - eta(alpha / (delta * delta), beta);
    derivatives_ok && first > second && second > 0.0
}

/// Float grouping key that sorts numerically for non-negative values.
fn key(x: f64) -> u64 {
    x.to_bits()
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean expensive-call ratio per algorithm, `p1` and `ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub algorithm: Algorithm,
    pub p1: f64,
    pub epsilon: f64,
    pub runs: usize,
    pub mean_ratio: Option<f64>,
}

pub fn expensive_ratio_table(records: &[BenchRecord]) -> Vec<RatioRow> {
    let mut groups: BTreeMap<(Algorithm, u64, u64), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        groups.entry((r.algorithm, key(r.p1), key(r.epsilon))).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((algorithm, p1, eps), rs)| RatioRow {
            algorithm,
            p1: f64::from_bits(p1),
            epsilon: f64::from_bits(eps),
            runs: rs.len(),
            mean_ratio: mean(rs.iter().filter_map(|r| r.expensive_ratio())),
        })
        .collect()
}

/// Mean returned ratio per algorithm, `p1` and `ε`, over runs with a plan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtaRow {
    pub algorithm: Algorithm,
    pub p1: f64,
    pub epsilon: f64,
    pub runs: usize,
    pub successes: usize,
    pub mean_eta: Option<f64>,
}

pub fn eta_table(records: &[BenchRecord]) -> Vec<EtaRow> {
    let mut groups: BTreeMap<(Algorithm, u64, u64), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        groups.entry((r.algorithm, key(r.p1), key(r.epsilon))).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((algorithm, p1, eps), rs)| EtaRow {
            algorithm,
            p1: f64::from_bits(p1),
            epsilon: f64::from_bits(eps),
            runs: rs.len(),
            successes: rs.iter().filter(|r| r.success).count(),
            mean_eta: mean(rs.iter().map(|r| r.eta_eff).filter(|e| e.is_finite())),
        })
        .collect()
}

/// Per-algorithm, per-`ε` summary of search and post-search refinement.
/// Ratio means and call sums are taken over the runs where refinement was
/// invoked.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub runs: usize,
    pub search_successes: usize,
    pub ese_invoked: usize,
    pub ese_successes: usize,
    pub search_eta_invoked: Option<f64>,
    pub ese_eta_invoked: Option<f64>,
    pub search_expensive_invoked: u64,
    pub ese_expensive_invoked: u64,
}

impl SummaryRow {
    pub fn search_success_rate(&self) -> f64 {
        percent(self.search_successes, self.runs)
    }

    pub fn ese_invoked_rate(&self) -> f64 {
        percent(self.ese_invoked, self.runs)
    }

    pub fn ese_success_rate(&self) -> f64 {
        percent(self.ese_successes, self.ese_invoked)
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

pub fn summary_by_epsilon(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Algorithm, u64), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.algorithm, key(r.epsilon))).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((algorithm, eps), rs)| {
            let invoked: Vec<&&BenchRecord> = rs.iter().filter(|r| r.ese_invoked).collect();
            SummaryRow {
                algorithm,
                epsilon: f64::from_bits(eps),
                runs: rs.len(),
                search_successes: rs.iter().filter(|r| r.status.is_some() && within(r.search_eta, r.epsilon)).count(),
                ese_invoked: invoked.len(),
                ese_successes: invoked.iter().filter(|r| r.ese_success).count(),
                search_eta_invoked: mean(invoked.iter().map(|r| r.search_eta)),
                ese_eta_invoked: mean(invoked.iter().map(|r| r.eta_eff)),
                search_expensive_invoked: invoked.iter().map(|r| r.expensive_calls).sum(),
                ese_expensive_invoked: invoked.iter().map(|r| r.ese_expensive_calls).sum(),
            }
        })
        .collect()
}

fn within(eta: f64, epsilon: f64) -> bool {
    crate::estimation::within_bound(eta, epsilon)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

/// Fixed-width text rendering of [`summary_by_epsilon`].
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>6}  {:>6}  {:>16}  {:>16}  {:>16}  {:>13}  {:>22}",
        "algorithm",
        "eps",
        "runs",
        "search success",
        "ese invoked",
        "ese success",
        "eta (ese)",
        "expensive calls (ese)"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>6}  {:>6}  {:>16}  {:>16}  {:>16}  {:>13}  {:>22}",
            r.algorithm.as_str(),
            format_number(r.epsilon),
            r.runs,
            format!("{} ({:.2}%)", r.search_successes, r.search_success_rate()),
            format!("{} ({:.2}%)", r.ese_invoked, r.ese_invoked_rate()),
            format!("{} ({:.2}%)", r.ese_successes, r.ese_success_rate()),
            format!("{} ({})", opt(r.search_eta_invoked), opt(r.ese_eta_invoked)),
            format!("{} ({})", r.search_expensive_invoked, r.ese_expensive_invoked),
        );
    }
    out
}

/// Tab-separated `algorithm p1 epsilon runs mean_ratio`.
pub fn ratio_tsv(rows: &[RatioRow]) -> String {
    let mut out = String::from("algorithm\tp1\tepsilon\truns\tmean_expensive_ratio\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.algorithm,
            format_number(r.p1),
            format_number(r.epsilon),
            r.runs,
            r.mean_ratio.map_or("nan".into(), format_number)
        );
    }
    out
}

/// Tab-separated `algorithm p1 epsilon runs successes mean_eta`.
pub fn eta_tsv(rows: &[EtaRow]) -> String {
    let mut out = String::from("algorithm\tp1\tepsilon\truns\tsuccesses\tmean_eta\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.algorithm,
            format_number(r.p1),
            format_number(r.epsilon),
            r.runs,
            r.successes,
            r.mean_eta.map_or("nan".into(), format_number)
        );
    }
    out
}

/// Tab-separated mean projected runtime per algorithm, `ε` and latency.
pub fn projected_runtime_tsv(records: &[BenchRecord], taus_ms: &[f64]) -> String {
    let mut groups: BTreeMap<(Algorithm, u64), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        groups.entry((r.algorithm, key(r.epsilon))).or_default().push(r);
    }
    let mut out = String::from("algorithm\tepsilon\ttau_ms\tmean_projected_ms\n");
    for ((algorithm, eps), rs) in groups {
        for &tau in taus_ms {
            let m = mean(rs.iter().map(|r| projected_runtime(r, tau))).unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "{algorithm}\t{}\t{}\t{}",
                format_number(f64::from_bits(eps)),
                format_number(tau),
                format_number(m)
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_corpus() -> Vec<BenchTask> {
        (0..3)
            .map(|seed| {
                let (task, base_costs) = random_task(&RandomTaskParams::default(), seed);
                BenchTask { name: format!("random-{seed}"), task, base_costs }
            })
            .collect()
    }

    fn grid(epsilons: Vec<f64>, algorithms: Vec<Algorithm>) -> Grid {
        Grid {
            epsilons,
            p1: vec![1.0],
            p2: vec![1.0],
            p3: vec![1.0],
            seeds: vec![7],
            algorithms,
            heuristics: vec![HeuristicKind::Blind],
        }
    }

    #[test]
    fn two_epsilons_give_two_records() {
        let tasks = &tiny_corpus()[..1];
        let records = run_grid(tasks, &grid(vec![1.0, 4.0], vec![Algorithm::Asec]), &BenchOptions::default());
        assert_eq!(records.len(), 2);
        assert!(records.iter().all(|r| r.error.is_none() && r.success));
        let csv = to_csv(&records);
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    }

    #[test]
    fn indifferent_uses_every_available_expensive_call() {
        let records = run_grid(
            &tiny_corpus(),
            &grid(vec![1.0, 2.0, 4.0], vec![Algorithm::Indifferent]),
            &BenchOptions::default(),
        );
        for r in &records {
            assert_eq!(r.expensive_ratio(), Some(1.0));
        }
    }

    #[test]
    fn csv_is_reproducible() {
        let g = grid(vec![1.0, 1.5, 4.0], Algorithm::ALL.to_vec());
        let a = to_csv(&run_grid(&tiny_corpus(), &g, &BenchOptions::default()));
        let b = to_csv(&run_grid(&tiny_corpus(), &g, &BenchOptions::default()));
        assert_eq!(a, b);
    }

    #[test]
    fn failures_are_recorded() {
        let mut tasks = tiny_corpus();
        tasks[0].base_costs[0] = 0.0;
        let records = run_grid(&tasks, &grid(vec![1.0], vec![Algorithm::Asec]), &BenchOptions::default());
        assert_eq!(records.len(), 3);
        assert!(records[0].error.as_deref().unwrap().contains("positive"));
        assert!(records[0].eta_eff.is_nan());
        assert!(to_csv(&records).lines().nth(1).unwrap().contains(",nan,"));
        assert!(records[1].error.is_none());
    }

    #[test]
    fn projected_runtime_examples() {
        let mut r = BenchRecord::blank("t", &grid(vec![1.0], vec![Algorithm::Asec]).variants()[0]);
        r.wall_ms = 12.5;
        r.expensive_calls = 1000;
        assert_eq!(projected_runtime(&r, 0.0), 12.5);
        assert_eq!(projected_runtime(&r, 10.0), 10_012.5);
        let taus = [0.0, 0.1, 1.0, 10.0, 100.0];
        let p: Vec<f64> = taus.iter().map(|&t| projected_runtime(&r, t)).collect();
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn diminishing_marginal_examples() {
        assert!(diminishing_marginal_check(10.0, 5.0, 4.0, 2.0, 2.0));
        assert!(diminishing_marginal_check(1.0, 1.0, 1.0, 1.0, 2.0));
        // A larger beta shrinks the alpha derivative.
        assert!(ratio_partials(10.0, 5.0, 4.0, 3.0).0 < ratio_partials(10.0, 5.0, 4.0, 2.0).0);
        assert_eq!(ratio_partials(1.0, 1.0, 1.0, 1.0), (0.5, -0.5));
    }

    #[test]
    fn summary_matches_records() {
        let g = Grid { p3: vec![0.25], p2: vec![0.5], ..grid(vec![1.5, 2.0], vec![Algorithm::AsecEse]) };
        let records = run_grid(&tiny_corpus(), &g, &BenchOptions::default());
        let rows = summary_by_epsilon(&records);
        assert_eq!(rows.len(), 2);
        for row in &rows {
            let rs: Vec<_> = records.iter().filter(|r| r.epsilon == row.epsilon).collect();
            assert_eq!(row.runs, rs.len());
            assert_eq!(row.ese_invoked, rs.iter().filter(|r| r.ese_invoked).count());
        }
        assert!(format_summary(&rows).lines().count() == 3);
    }
}
