//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! line per criterion and exits non-zero if any fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use estplan::bench::{
    diminishing_marginal_check, run_variant, synthesize_estimators, to_csv, BenchOptions, BenchRecord, BenchTask,
    RandomTaskParams, SplitMix64, TierProbabilities, VariantConfig,
};
use estplan::estimation::RELATIVE_TOLERANCE;
use estplan::estimation::{BoundCache, EstimationError, ExternalError, ExternalSource};
use estplan::fixtures::diamond;
use estplan::heuristics::{HeuristicCostView, HeuristicKind};
use estplan::oracle::StateSpace;
use estplan::planner::{solve, Algorithm, PlannerConfig};
use estplan::search::Status;

use common::{optimal, random_tasks, repo_corpus, wide_params};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn variant(epsilon: f64, p1: f64, p2: f64, p3: f64, seed: u64, algorithm: Algorithm) -> VariantConfig {
    VariantConfig { epsilon, probs: TierProbabilities { p1, p2, p3 }, seed, algorithm, heuristic: HeuristicKind::HMax }
}

fn run(task: &BenchTask, config: &VariantConfig) -> BenchRecord {
    let r = run_variant(task, config, &BenchOptions::default());
    assert!(r.error.is_none(), "{} {:?}: {:?}", task.name, config, r.error);
    r
}

fn within(cost: f64, optimal: f64, factor: f64) -> bool {
    factor.is_infinite() || cost <= optimal * factor * (1.0 + RELATIVE_TOLERANCE)
}

/// True costs of the synthesized table for `config`.
fn true_costs(task: &BenchTask, config: &VariantConfig) -> Vec<f64> {
    let (_, oracle) = synthesize_estimators(&task.base_costs, config.probs, config.seed, 1.0).unwrap();
    oracle.costs().to_vec()
}

fn epsilon_grid() -> Vec<f64> {
    (0..=12).map(|i| 1.0 + 0.25 * i as f64).collect()
}

const PROBS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Records of criteria 1 and 2: asec, asec+ese and indifferent over 1000
/// instances, with tier probabilities varied per instance.
fn soundness_records() -> Vec<(BenchRecord, f64)> {
    let tasks = random_tasks(&RandomTaskParams::default(), 0, 1000);
    let mut out = Vec::new();
    for (i, task) in tasks.iter().enumerate() {
        let (p1, p2, p3) = (PROBS[i % 4], PROBS[(i / 4) % 4], PROBS[(i / 16) % 4]);
        let seed = 1000 + i as u64;
        let c_star = optimal(task, &true_costs(task, &variant(1.0, p1, p2, p3, seed, Algorithm::Asec)));
        for eps in [1.0, 1.25, 1.5, 2.0, 3.0, 4.0] {
            for algorithm in [Algorithm::Asec, Algorithm::AsecEse, Algorithm::Indifferent] {
                out.push((run(task, &variant(eps, p1, p2, p3, seed, algorithm)), c_star));
            }
        }
    }
    out
}

fn criterion_1(records: &[(BenchRecord, f64)]) -> Outcome {
    let claimed: Vec<_> = records
        .iter()
        .filter(|(r, _)| {
            matches!(r.algorithm, Algorithm::Asec | Algorithm::AsecEse) && r.status == Some(Status::EpsilonOk)
        })
        .collect();
    let bad = claimed.iter().filter(|(r, c)| !within(r.plan_cost.unwrap(), *c, r.epsilon)).count();
    outcome(
        bad == 0,
        format!(
            "{} epsilon_ok runs on 1000 instances x 6 epsilons, {} violate c(plan) <= eps * c*",
            claimed.len(),
            bad
        ),
    )
}

fn criterion_2(records: &[(BenchRecord, f64)]) -> Outcome {
    let runs: Vec<_> = records
        .iter()
        .filter(|(r, _)| matches!(r.algorithm, Algorithm::Asec | Algorithm::Indifferent) && r.plan.is_some())
        .collect();
    let bad = runs.iter().filter(|(r, c)| !within(r.plan_cost.unwrap(), *c, r.eta_eff)).count();
    outcome(
        bad == 0,
        format!("{} asec/indifferent runs with a plan, {} violate c(plan) <= eta_eff * c*", runs.len(), bad),
    )
}

fn criterion_3() -> Outcome {
    let tasks = random_tasks(&RandomTaskParams::default(), 5000, 500);
    let mut runs = 0;
    let mut bad = 0;
    for task in &tasks {
        let c_star = optimal(task, &task.base_costs);
        for algorithm in [Algorithm::Asec, Algorithm::Indifferent, Algorithm::FullyLazy] {
            // p1 = 0 leaves every action with one exact tier.
            let r = run(task, &variant(1.0, 0.0, 1.0, 1.0, 0, algorithm));
            runs += 1;
            if r.plan_cost != Some(c_star) || r.status != Some(Status::EpsilonOk) {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{runs} runs on 500 exact instances at eps=1, {bad} differ from c*"))
}

fn criterion_4() -> Outcome {
    let tasks = random_tasks(&RandomTaskParams::default(), 9000, 200);
    let mut runs = 0;
    let mut missed = 0;
    for (i, task) in tasks.iter().enumerate() {
        for p1 in [0.25, 0.5, 1.0] {
            for &eps in &epsilon_grid() {
                let r = run(task, &variant(eps, p1, 1.0, 1.0, i as u64, Algorithm::Asec));
                runs += 1;
                if r.status != Some(Status::EpsilonOk) {
                    missed += 1;
                }
            }
        }
    }
    outcome(missed == 0, format!("{runs} asec runs with p2=p3=1, {missed} not epsilon_ok"))
}

/// Desk-scale random tasks (up to 2^16 states) plus the repository corpus.
fn desk_corpus() -> Vec<BenchTask> {
    let mut tasks = random_tasks(&wide_params(), 30_000, 200);
    tasks.extend(repo_corpus());
    tasks
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

/// Per-epsilon records for `p1` on the desk corpus, asec, p2=p3=1.
fn economy_records(tasks: &[BenchTask], p1: f64) -> Vec<(f64, Vec<BenchRecord>)> {
    epsilon_grid()
        .into_iter()
        .map(|eps| {
            let rs = tasks
                .iter()
                .enumerate()
                .map(|(i, t)| run(t, &variant(eps, p1, 1.0, 1.0, 77 + i as u64, Algorithm::Asec)))
                .collect();
            (eps, rs)
        })
        .collect()
}

fn criterion_5(by_eps: &[(f64, Vec<BenchRecord>)]) -> Outcome {
    let ratios: Vec<f64> = by_eps.iter().map(|(_, rs)| mean(rs.iter().filter_map(|r| r.expensive_ratio()))).collect();
    let inversions: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
    let monotone = inversions.is_empty() || (inversions.len() == 1 && inversions[0] <= 0.02);
    let first = ratios[0];
    let last = *ratios.last().unwrap();
    let pass = first < 1.0 && monotone && last < 0.05;
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    outcome(
        pass,
        format!(
            "{} tasks, mean expensive ratio by eps 1..4: [{}]; {} inversion(s)",
            by_eps[0].1.len(),
            shown.join(", "),
            inversions.len()
        ),
    )
}

fn criterion_6(full: &[(f64, Vec<BenchRecord>)], tasks: &[BenchTask]) -> Outcome {
    let mut pass = true;
    let mut means = Vec::new();
    for (eps, rs) in full {
        let ok: Vec<f64> = rs.iter().filter(|r| r.success).map(|r| r.eta_eff).collect();
        if !ok.is_empty() && mean(ok.iter().copied()) > *eps {
            pass = false;
        }
        means.push(mean(rs.iter().map(|r| r.eta_eff).filter(|e| e.is_finite())));
    }
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    pass &= increasing;
    let mut sparse_detail = Vec::new();
    let mut sparse_at_one = Vec::new();
    for p1 in [0.01, 0.05, 0.1] {
        for (eps, rs) in economy_records(tasks, p1) {
            let m = mean(rs.iter().map(|r| r.eta_eff).filter(|e| e.is_finite()));
            let target = 0.5 * (eps - 1.0) + 1.0;
            if eps == 1.0 {
                // eta_eff >= 1 always, so the strict bound cannot hold here.
                sparse_at_one.push(format!("p1={p1}: {m:.3}"));
            } else if m >= target {
                pass = false;
                sparse_detail.push(format!("p1={p1} eps={eps}: {m:.3} >= {target:.3}"));
            }
        }
    }
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.3}")).collect();
    outcome(
        pass,
        format!(
            "p1=1 mean eta by eps: [{}]{}; p1<=0.1 over eps>1: {}; at eps=1 (informational): {}",
            shown.join(", "),
            if increasing { "" } else { " (not increasing)" },
            if sparse_detail.is_empty() { "all below 0.5(eps-1)+1".to_string() } else { sparse_detail.join("; ") },
            sparse_at_one.join(", ")
        ),
    )
}

fn criterion_7(tasks: &[BenchTask]) -> Outcome {
    let mut invoked = 0usize;
    let mut succeeded = 0usize;
    let mut increased = 0usize;
    let mut search_calls = 0u64;
    let mut ese_calls = 0u64;
    let mut configs = Vec::new();
    for p1 in PROBS {
        for p2 in PROBS {
            for p3 in [0.25, 0.5, 0.75] {
                for eps in [1.5, 2.0, 2.5, 3.0, 3.5] {
                    configs.push((p1, p2, p3, eps));
                }
            }
        }
    }
    let mut runs = 0;
    for (i, task) in tasks.iter().enumerate() {
        // Each task gets every fifth configuration, rotating with the task.
        for &(p1, p2, p3, eps) in configs.iter().skip(i % 5).step_by(5) {
            let r = run(task, &variant(eps, p1, p2, p3, i as u64, Algorithm::AsecEse));
            runs += 1;
            if !r.ese_invoked {
                continue;
            }
            invoked += 1;
            succeeded += r.ese_success as usize;
            if r.eta_eff > r.search_eta {
                increased += 1;
            }
            search_calls += r.cheap_calls + r.expensive_calls;
            ese_calls += r.ese_calls;
        }
    }
    let success_rate = succeeded as f64 / invoked.max(1) as f64;
    let call_share = ese_calls as f64 / search_calls.max(1) as f64;
    let pass = invoked > 0 && increased == 0 && success_rate > 0.10 && call_share < 0.01;
    outcome(
        pass,
        format!(
            "{runs} runs ({} tasks, 240 configs): invoked {invoked}, eta increased {increased}, success {succeeded} ({:.1}%), refinement calls {ese_calls} vs search calls {search_calls} ({:.3}%)",
            tasks.len(),
            100.0 * success_rate,
            100.0 * call_share
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut tasks = random_tasks(&RandomTaskParams::default(), 50_000, 200);
    tasks.extend(repo_corpus());
    let mut checked = 0;
    let mut states = 0;
    let mut inconsistent = 0;
    let mut inadmissible = 0;
    for (i, task) in tasks.iter().enumerate() {
        let Ok(space) = StateSpace::explore(&task.task, 1 << 12) else { continue };
        checked += 1;
        states += space.len();
        let probs = TierProbabilities { p1: 0.5, p2: 0.5, p3: 0.5 };
        let (table, oracle) = synthesize_estimators(&task.base_costs, probs, i as u64, 1.0).unwrap();
        let view = HeuristicCostView::cheapest_lower_bounds(&table);
        let to_go = space.cost_to_go(&task.task, oracle.costs());
        let mut h = HeuristicKind::HMax.build(&task.task, &view);
        let values: Vec<f64> = space.states.iter().map(|s| h.evaluate(s)).collect();
        for (s, out) in space.edges.iter().enumerate() {
            if values[s] > to_go[s] * (1.0 + RELATIVE_TOLERANCE) {
                inadmissible += 1;
            }
            for &(a, t) in out {
                if values[s] > view.cost(a) + values[t] + 1e-9 * values[s].max(1.0) {
                    inconsistent += 1;
                }
            }
        }
    }
    outcome(
        inconsistent == 0 && inadmissible == 0 && checked > 0,
        format!("{checked} tasks with <= 4096 states ({states} states): {inconsistent} inconsistent edges, {inadmissible} inadmissible states"),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = SplitMix64::new(9);
    let mut draw = |lo: f64, hi: f64| lo + (hi - lo) * rng.next_f64();
    let mut bad = 0;
    for _ in 0..100 {
        let (n, d, alpha, beta, delta) =
            (draw(0.1, 100.0), draw(0.1, 100.0), draw(0.1, 100.0), draw(0.1, 100.0), draw(1.01, 10.0));
        if !diminishing_marginal_check(n, d, alpha, beta, delta) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("100 random points, {bad} failed the derivative or decreasing-gain check"))
}

fn criterion_10() -> Outcome {
    let tasks = random_tasks(&RandomTaskParams::default(), 60_000, 10);
    let mut configs = Vec::new();
    for (i, task) in tasks.iter().enumerate() {
        for (j, algorithm) in Algorithm::ALL.into_iter().enumerate() {
            let eps = [1.0, 1.5, 2.0, 3.0, 4.0][(i + j) % 5];
            configs.push((task, variant(eps, 0.5, 0.75, 0.5, (i * 7 + j) as u64, algorithm)));
            configs.push((task, variant(eps, 1.0, 1.0, 0.25, (i * 7 + j) as u64, algorithm)));
        }
    }
    let first: Vec<BenchRecord> = configs.iter().map(|(t, c)| run(t, c)).collect();
    let second: Vec<BenchRecord> = configs.iter().map(|(t, c)| run(t, c)).collect();
    let same_csv = to_csv(&first) == to_csv(&second);
    let same_plans = first.iter().zip(&second).all(|(a, b)| a.plan == b.plan);
    outcome(
        same_csv && same_plans,
        format!("{} configs rerun: csv identical {same_csv}, plans identical {same_plans}", configs.len()),
    )
}

/// Estimator that answers correctly except for tier 1 of `s0-a`.
fn faulty_estimator(fault: &str) -> String {
    format!(
        "while read cmd name tier; do case \"$name $tier\" in \
         's0-a 1') {fault} ;; 's0-a 0') echo '1 4' ;; 's0-b 0') echo '3 3' ;; *) echo '1 1' ;; esac; done"
    )
}

type Classifier = fn(&ExternalError) -> bool;

fn criterion_11() -> Outcome {
    let cases: [(&str, &str, Classifier); 4] = [
        ("malformed line", "echo 'two point five'", |e| matches!(e, ExternalError::Malformed(_))),
        (
            "reversed bounds",
            "echo '4 2'",
            |e| matches!(e, ExternalError::ReversedBounds { lo, hi } if *lo == 4.0 && *hi == 2.0),
        ),
        ("timeout", "sleep 5", |e| matches!(e, ExternalError::Timeout(_))),
        ("process death", "exit 0", |e| matches!(e, ExternalError::Exited)),
    ];
    let d = diamond();
    let names: Vec<String> = d.task.actions().iter().map(|a| a.name.clone()).collect();
    let timeout = Duration::from_millis(300);
    let spawn = |fault: &str| {
        let mut command = Command::new("sh");
        command.arg("-c").arg(faulty_estimator(fault));
        ExternalSource::spawn(command, names.clone(), timeout).expect("sh is available")
    };
    let mut correct = 0;
    let mut notes = Vec::new();
    for (label, fault, expected) in cases {
        // Direct request: the error must carry the right classification.
        let mut source = spawn(fault);
        let direct =
            source.request("s0-a", 0).is_ok() && matches!(source.request("s0-a", 1), Err(ref e) if expected(e));
        // Inside search: the failed tier is skipped and planning finishes.
        let mut cache = BoundCache::new(&d.estimators, Box::new(spawn(fault)));
        let config = PlannerConfig::new(Algorithm::AsecEse, HeuristicKind::HMax, 1.0);
        let searched = match solve(&d.task, &mut cache, &config) {
            Ok(report) => report.result.plan.is_some() && cache.stats().failed_calls >= 1,
            Err(e) => {
                notes.push(format!("{label}: {e}"));
                false
            }
        };
        // The cache reports the failure as a recoverable tier failure.
        let mut cache = BoundCache::new(&d.estimators, Box::new(spawn(fault)));
        cache.get_estimator(d.s0_a);
        cache.apply_estimator(d.s0_a, 0).unwrap();
        cache.get_estimator(d.s0_a);
        let classified = matches!(cache.apply_estimator(d.s0_a, 1), Err(ref e @ EstimationError::External { .. }) if e.is_tier_unavailable());
        if direct && searched && classified {
            correct += 1;
        } else {
            notes.push(format!("{label}: direct {direct}, search {searched}, cache {classified}"));
        }
    }
    outcome(
        correct == 4,
        format!(
            "{correct}/4 injected faults classified and survived{}",
            if notes.is_empty() { String::new() } else { format!(" ({})", notes.join("; ")) }
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, start: Instant, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {name:<26} {verdict}  {}  [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    };

    let t = Instant::now();
    let records = soundness_records();
    report(1, "epsilon soundness", t, criterion_1(&records));
    report(2, "eta bound", t, criterion_2(&records));
    drop(records);
    let t = Instant::now();
    report(3, "exact costs reduce to A*", t, criterion_3());
    let t = Instant::now();
    report(4, "completeness with p2=p3=1", t, criterion_4());
    let t = Instant::now();
    let tasks = desk_corpus();
    let full = economy_records(&tasks, 1.0);
    report(5, "estimator economy", t, criterion_5(&full));
    let t = Instant::now();
    report(6, "eta targeting", t, criterion_6(&full, &tasks));
    let t = Instant::now();
    report(7, "post-search refinement", t, criterion_7(&tasks));
    let t = Instant::now();
    report(8, "heuristic properties", t, criterion_8());
    let t = Instant::now();
    report(9, "diminishing marginal gain", t, criterion_9());
    let t = Instant::now();
    report(10, "determinism", t, criterion_10());
    let t = Instant::now();
    report(11, "estimator fault injection", t, criterion_11());

    if failed == 0 {
        println!("acceptance: all 11 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria fail");
        ExitCode::FAILURE
    }
}
