use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

use estplan::bench::synthesize_estimators;
use estplan::estimation::{BoundCache, CostSource, EstimatorTable, ExternalSource, TableSource};
use estplan::heuristics::HeuristicKind;
use estplan::ingest::{load_pddl, parse_native};
use estplan::oracle::{check_eta_bound, dijkstra_optimal, CostOracleTable, DEFAULT_STATE_CAP};
use estplan::planner::{solve, Algorithm, PlannerConfig};
use estplan::post_search::AltBound;
use estplan::search::{SearchStats, Status};
use estplan::task::GroundTask;

use crate::{parse_algorithm, parse_alt, parse_heuristic, SynthesisArgs};
use crate::{EXIT_BOUND_MISSED, EXIT_OK, EXIT_UNSOLVABLE};

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// A `.json` task, or a PDDL domain followed by a problem.
    #[arg(required = true, num_args = 1..=2)]
    pub task: Vec<PathBuf>,
    #[arg(long, default_value = "asec", value_parser = parse_algorithm)]
    pub algorithm: Algorithm,
    #[arg(long, default_value = "hmax", value_parser = parse_heuristic)]
    pub heuristic: HeuristicKind,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Refine the returned plan after search; same as `--algorithm asec+ese`.
    #[arg(long)]
    pub ese: bool,
    /// Bound used for the alternative to the plan during refinement.
    #[arg(long, value_parser = parse_alt)]
    pub ese_alt: Option<AltBound>,
    /// Sleep for each tier's nominal latency.
    #[arg(long)]
    pub simulate_latency: bool,
    /// Ignore unknown keys in JSON input.
    #[arg(long)]
    pub lenient: bool,
    /// Compare against the optimal plan under the true costs.
    #[arg(long)]
    pub validate: bool,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Shell command of an external estimator process.
    #[arg(long)]
    pub estimator_cmd: Option<String>,
    /// Seconds to wait for each external estimator response.
    #[arg(long, default_value_t = 30.0)]
    pub estimator_timeout: f64,
    #[command(flatten)]
    pub synthesis: SynthesisArgs,
}

pub struct LoadedTask {
    pub task: GroundTask,
    pub estimators: EstimatorTable,
    pub oracle: Option<CostOracleTable>,
}

pub fn load_pddl_task(domain: &Path, problem: &Path, synthesis: &SynthesisArgs) -> anyhow::Result<LoadedTask> {
    let domain_text = fs::read_to_string(domain).with_context(|| format!("reading {}", domain.display()))?;
    let problem_text = fs::read_to_string(problem).with_context(|| format!("reading {}", problem.display()))?;
    let loaded = load_pddl(&domain_text, &problem_text, !synthesis.no_prune)?;
    let (estimators, oracle) =
        synthesize_estimators(&loaded.costs, synthesis.probabilities(), synthesis.seed(), synthesis.tau_ms())?;
    Ok(LoadedTask { task: loaded.task, estimators, oracle: Some(oracle) })
}

fn load(args: &PlanArgs) -> anyhow::Result<LoadedTask> {
    match args.task.as_slice() {
        [json] => {
            if args.synthesis.any_given() {
                bail!("--seed, --p1, --p2, --p3, --tau-ms and --no-prune apply to PDDL input only");
            }
            let text = fs::read_to_string(json).with_context(|| format!("reading {}", json.display()))?;
            let native = parse_native(&text, args.lenient).with_context(|| json.display().to_string())?;
            Ok(LoadedTask { task: native.task, estimators: native.estimators, oracle: native.oracle })
        }
        [domain, problem] => {
            if args.lenient {
                bail!("--lenient applies to JSON input only");
            }
            load_pddl_task(domain, problem, &args.synthesis)
        }
        _ => unreachable!("clap enforces one or two paths"),
    }
}

fn config(args: &PlanArgs) -> anyhow::Result<PlannerConfig> {
    let algorithm = match (args.ese, args.algorithm) {
        (false, a) => a,
        (true, Algorithm::Asec | Algorithm::AsecEse) => Algorithm::AsecEse,
        (true, a) => bail!("--ese refines ASEC results and cannot be combined with --algorithm {a}"),
    };
    if args.ese_alt.is_some() && algorithm != Algorithm::AsecEse {
        bail!("--ese-alt needs --ese or --algorithm asec+ese");
    }
    if !(args.estimator_timeout.is_finite() && args.estimator_timeout > 0.0) {
        bail!("--estimator-timeout must be a positive number of seconds");
    }
    Ok(PlannerConfig {
        algorithm,
        heuristic: args.heuristic,
        epsilon: args.epsilon,
        ese_alt: args.ese_alt.unwrap_or_default(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EseSummary {
    pub invoked: bool,
    pub success: bool,
    pub calls: u64,
    pub expensive_calls: u64,
    pub eta_before: Option<f64>,
    pub eta_after: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub true_cost: f64,
    pub optimal_cost: f64,
    /// True cost within `eta_eff` times the optimum.
    pub within_eta: bool,
    /// True cost within `epsilon` times the optimum.
    pub within_epsilon: bool,
}

/// Everything `plan` reports. Infinite ratios are written as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub algorithm: Algorithm,
    pub heuristic: HeuristicKind,
    pub epsilon: f64,
    pub status: Status,
    pub plan: Option<Vec<String>>,
    pub c_min: Option<f64>,
    pub c_max: Option<f64>,
    pub eta_eff: Option<f64>,
    /// Expensive calls made over those available.
    pub expensive_ratio: Option<f64>,
    pub stats: SearchStats,
    pub ese: Option<EseSummary>,
    pub validation: Option<Validation>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::EpsilonOk => EXIT_OK,
        Status::PlanFoundBoundMissed => EXIT_BOUND_MISSED,
        Status::Unsolvable => EXIT_UNSOLVABLE,
    }
}

pub fn run(args: &PlanArgs) -> anyhow::Result<u8> {
    let config = config(args)?;
    let loaded = load(args)?;
    if args.validate && loaded.oracle.is_none() {
        bail!("--validate needs true costs: give true_cost for every action or use PDDL input");
    }
    let source: Box<dyn CostSource> = match &args.estimator_cmd {
        Some(cmd) => {
            let mut command = Command::new("sh");
            command.arg("-c").arg(cmd);
            let names = loaded.task.actions().iter().map(|a| a.name.clone()).collect();
            let timeout = Duration::from_secs_f64(args.estimator_timeout);
            Box::new(ExternalSource::spawn(command, names, timeout).context("starting estimator process")?)
        }
        None => Box::new(TableSource { simulate_latency: args.simulate_latency }),
    };
    let mut cache = BoundCache::new(&loaded.estimators, source);
    if let Some(oracle) = &loaded.oracle {
        cache = cache.with_oracle(oracle);
    }
    let solved = solve(&loaded.task, &mut cache, &config)?;
    let result = solved.result;
    let validation = match (&loaded.oracle, &result.plan) {
        (Some(oracle), Some(plan)) if args.validate => {
            let optimal = dijkstra_optimal(&loaded.task, oracle, DEFAULT_STATE_CAP)?;
            let true_cost = oracle.plan_cost(plan);
            Some(Validation {
                true_cost,
                optimal_cost: optimal.cost,
                within_eta: check_eta_bound(plan, result.eta_eff, oracle, optimal.cost),
                within_epsilon: check_eta_bound(plan, config.epsilon, oracle, optimal.cost),
            })
        }
        _ => None,
    };
    let report = PlanReport {
        algorithm: config.algorithm,
        heuristic: config.heuristic,
        epsilon: config.epsilon,
        status: result.status,
        plan: result.plan.as_ref().map(|p| p.actions.iter().map(|&a| loaded.task.action(a).name.clone()).collect()),
        c_min: result.bounds.map(|b| b.c_min),
        c_max: result.bounds.and_then(|b| finite(b.c_max)),
        eta_eff: finite(result.eta_eff),
        expensive_ratio: (result.stats.max_expensive_calls > 0)
            .then(|| result.stats.expensive_calls as f64 / result.stats.max_expensive_calls as f64),
        stats: result.stats.clone(),
        ese: solved.ese.map(|e| EseSummary {
            invoked: e.invoked,
            success: e.success,
            calls: e.calls,
            expensive_calls: e.expensive_calls,
            eta_before: finite(e.eta_before),
            eta_after: finite(e.eta_after),
        }),
        validation,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", render(&report));
    }
    Ok(exit_code(report.status))
}

fn num(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".to_string(), |v| format!("{v}"))
}

pub fn render(r: &PlanReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "status: {}", r.status);
    match &r.plan {
        Some(plan) => {
            let _ = writeln!(out, "plan ({} steps):", plan.len());
            for step in plan {
                let _ = writeln!(out, "  {step}");
            }
            let _ = writeln!(out, "cost bounds: [{}, {}]", num(r.c_min), num(r.c_max));
            let _ = writeln!(out, "eta_eff: {} (epsilon {})", num(r.eta_eff), r.epsilon);
        }
        None => {
            let _ = writeln!(out, "plan: none");
        }
    }
    let s = &r.stats;
    let _ = writeln!(
        out,
        "search: {} expansions, {} generations, {} reopenings, {} iterations",
        s.expansions, s.generations, s.reopenings, s.iterations
    );
    let _ = write!(
        out,
        "estimator calls: {} cheap, {} expensive of {} available",
        s.cheap_calls, s.expensive_calls, s.max_expensive_calls
    );
    match r.expensive_ratio {
        Some(ratio) => {
            let _ = writeln!(out, " (ratio {ratio:.4})");
        }
        None => out.push('\n'),
    }
    if s.failed_estimator_calls > 0 {
        let _ = writeln!(out, "failed estimator calls: {}", s.failed_estimator_calls);
    }
    if let Some(e) = &r.ese {
        if e.invoked {
            let _ = writeln!(
                out,
                "refinement: {} calls ({} expensive), eta {} -> {}, {}",
                e.calls,
                e.expensive_calls,
                num(e.eta_before),
                num(e.eta_after),
                if e.success { "bound met" } else { "bound missed" }
            );
        } else {
            let _ = writeln!(out, "refinement: not needed or nothing left to refine");
        }
    }
    if let Some(v) = &r.validation {
        let _ = writeln!(out, "true cost: {} (optimal {})", v.true_cost, v.optimal_cost);
        let _ = writeln!(out, "cost within eta_eff of optimal: {}", yes_no(v.within_eta));
        let _ = writeln!(out, "cost within epsilon of optimal: {}", yes_no(v.within_epsilon));
    }
    out
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}
