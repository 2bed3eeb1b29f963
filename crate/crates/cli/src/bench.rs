use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;

use estplan::bench::{
    eta_table, eta_tsv, expensive_ratio_table, format_summary, load_corpus, projected_runtime_tsv, random_task,
    ratio_tsv, run_grid, summary_by_epsilon, to_csv, BenchOptions, BenchTask, Grid, RandomTaskParams,
};
use estplan::heuristics::HeuristicKind;
use estplan::planner::Algorithm;
use estplan::post_search::AltBound;

use crate::{parse_algorithm, parse_alt, parse_heuristic, EXIT_ERROR, EXIT_OK};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Directory of tasks: `.json` files and PDDL directories with a `domain.pddl`.
    pub corpus: Option<PathBuf>,
    /// Also generate this many random tasks, seeded 0..N.
    #[arg(long, default_value_t = 0)]
    pub random: u64,
    /// CSV output file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,3,4")]
    pub epsilon: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub p1: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub p2: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub p3: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seed: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "asec", value_parser = parse_algorithm)]
    pub algorithm: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_value = "hmax", value_parser = parse_heuristic)]
    pub heuristic: Vec<HeuristicKind>,
    /// Add `asec+ese` to the algorithms.
    #[arg(long)]
    pub ese: bool,
    #[arg(long, value_parser = parse_alt)]
    pub ese_alt: Option<AltBound>,
    /// Nominal latency of the expensive tiers, in milliseconds.
    #[arg(long, default_value_t = 1.0)]
    pub tau_ms: f64,
    #[arg(long)]
    pub simulate_latency: bool,
    /// Write measured wall time; without it `wall_ms` is 0 so output is reproducible.
    #[arg(long)]
    pub record_wall_time: bool,
    /// Directory for the aggregate TSV tables.
    #[arg(long)]
    pub tables: Option<PathBuf>,
}

fn grid(args: &BenchArgs) -> anyhow::Result<Grid> {
    let mut algorithms = args.algorithm.clone();
    if args.ese && !algorithms.contains(&Algorithm::AsecEse) {
        algorithms.push(Algorithm::AsecEse);
    }
    if args.ese_alt.is_some() && !algorithms.contains(&Algorithm::AsecEse) {
        bail!("--ese-alt needs --ese or asec+ese among the algorithms");
    }
    if let Some(e) = args.epsilon.iter().find(|e| !(e.is_finite() && **e >= 1.0)) {
        bail!("epsilon {e} is not a finite number >= 1");
    }
    for (name, values) in [("p1", &args.p1), ("p2", &args.p2), ("p3", &args.p3)] {
        if let Some(p) = values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            bail!("{name} = {p} is outside [0, 1]");
        }
    }
    Ok(Grid {
        epsilons: args.epsilon.clone(),
        p1: args.p1.clone(),
        p2: args.p2.clone(),
        p3: args.p3.clone(),
        seeds: args.seed.clone(),
        algorithms,
        heuristics: args.heuristic.clone(),
    })
}

pub fn run(args: &BenchArgs) -> anyhow::Result<u8> {
    let grid = grid(args)?;
    let mut tasks: Vec<BenchTask> = match &args.corpus {
        Some(dir) => load_corpus(dir)?,
        None => Vec::new(),
    };
    for seed in 0..args.random {
        let (task, base_costs) = random_task(&RandomTaskParams::default(), seed);
        tasks.push(BenchTask { name: format!("random/{seed}"), task, base_costs });
    }
    if tasks.is_empty() {
        bail!("no tasks: give a non-empty corpus directory or --random N");
    }
    let options = BenchOptions {
        tau_ms: args.tau_ms,
        simulate_latency: args.simulate_latency,
        record_wall_time: args.record_wall_time,
        ese_alt: args.ese_alt.unwrap_or_default(),
        ..BenchOptions::default()
    };
    let records = run_grid(&tasks, &grid, &options);
    fs::write(&args.out, to_csv(&records)).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(dir) = &args.tables {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("expensive_ratio.tsv"), ratio_tsv(&expensive_ratio_table(&records)))?;
        fs::write(dir.join("eta.tsv"), eta_tsv(&eta_table(&records)))?;
        fs::write(dir.join("projected_runtime.tsv"), projected_runtime_tsv(&records, &[0.0, 0.1, 1.0, 10.0, 100.0]))?;
    }
    for r in records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "{} (seed {}, {}, eps {}): {}",
            r.task,
            r.seed,
            r.algorithm,
            r.epsilon,
            r.error.as_deref().unwrap_or("")
        );
    }
    print!("{}", format_summary(&summary_by_epsilon(&records)));
    let completed = records.iter().filter(|r| r.error.is_none()).count();
    println!("{} runs, {} completed, written to {}", records.len(), completed, args.out.display());
    Ok(if completed == 0 { EXIT_ERROR } else { EXIT_OK })
}
