//! `estplan`: plan with interval cost estimators, run benchmark grids and
//! convert task files.
//!
//! Exit codes: 0 when the plan meets the bound, 2 when a plan was found but
//! its ratio exceeds the bound, 3 when the task is unsolvable, 1 on any error.
//! `bench` exits 0 unless no run completed.

mod bench;
mod plan;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use estplan::bench::TierProbabilities;
use estplan::heuristics::HeuristicKind;
use estplan::planner::Algorithm;
use estplan::post_search::AltBound;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_BOUND_MISSED: u8 = 2;
pub const EXIT_UNSOLVABLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "estplan", version, about = "Planning with interval-valued action cost estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one task: a grounded JSON file, or a PDDL domain and problem.
    Plan(plan::PlanArgs),
    /// Run a parameter grid over a corpus and write a CSV.
    Bench(bench::BenchArgs),
    /// Write a PDDL task as grounded JSON with synthesized estimators.
    Convert(ConvertArgs),
}

/// Parameters of the estimator synthesis applied to PDDL input.
#[derive(Args, Debug, Clone, Default)]
pub struct SynthesisArgs {
    /// Seed for estimator synthesis [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probability that an action is estimated [default: 1].
    #[arg(long)]
    pub p1: Option<f64>,
    /// Probability of the (2c, 4c) tier [default: 1].
    #[arg(long)]
    pub p2: Option<f64>,
    /// Probability of the exact (2c, 2c) tier [default: 1].
    #[arg(long)]
    pub p3: Option<f64>,
    /// Nominal latency of the expensive tiers in milliseconds [default: 1].
    #[arg(long)]
    pub tau_ms: Option<f64>,
    /// Keep actions that can never be applied.
    #[arg(long)]
    pub no_prune: bool,
}

impl SynthesisArgs {
    pub fn probabilities(&self) -> TierProbabilities {
        TierProbabilities { p1: self.p1.unwrap_or(1.0), p2: self.p2.unwrap_or(1.0), p3: self.p3.unwrap_or(1.0) }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tau_ms(&self) -> f64 {
        self.tau_ms.unwrap_or(1.0)
    }

    /// Whether any synthesis flag was given explicitly.
    pub fn any_given(&self) -> bool {
        self.seed.is_some()
            || self.p1.is_some()
            || self.p2.is_some()
            || self.p3.is_some()
            || self.tau_ms.is_some()
            || self.no_prune
    }
}

#[derive(Args, Debug)]
struct ConvertArgs {
    domain: PathBuf,
    problem: PathBuf,
    #[command(flatten)]
    synthesis: SynthesisArgs,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

pub fn parse_heuristic(s: &str) -> Result<HeuristicKind, String> {
    s.parse()
}

pub fn parse_alt(s: &str) -> Result<AltBound, String> {
    s.parse()
}

fn convert(args: &ConvertArgs) -> anyhow::Result<()> {
    let loaded = plan::load_pddl_task(&args.domain, &args.problem, &args.synthesis)?;
    let text = estplan::ingest::emit_native(&loaded.task, &loaded.estimators, loaded.oracle.as_ref());
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Plan(args) => plan::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Convert(args) => convert(args).map(|()| EXIT_OK),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
