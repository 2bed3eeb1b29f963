mod common;

use estplan::bench::{
    eta_table, expensive_ratio_table, run_grid, summary_by_epsilon, synthesize_estimators, to_csv, BenchOptions, Grid,
    RandomTaskParams, TierProbabilities, CSV_HEADER,
};
use estplan::heuristics::HeuristicKind;
use estplan::planner::Algorithm;
use estplan::task::ActionId;
use proptest::prelude::*;

fn grid(epsilons: &[f64], algorithms: &[Algorithm]) -> Grid {
    Grid {
        epsilons: epsilons.to_vec(),
        p1: vec![1.0],
        p2: vec![1.0],
        p3: vec![1.0],
        seeds: vec![5],
        algorithms: algorithms.to_vec(),
        heuristics: vec![HeuristicKind::HMax],
    }
}

#[test]
fn one_task_two_epsilons() {
    let tasks = common::random_tasks(&RandomTaskParams::default(), 0, 30);
    let records = run_grid(&tasks, &grid(&[1.0, 4.0], &[Algorithm::Asec]), &BenchOptions::default());
    assert_eq!(records.len(), 60);
    assert_eq!(records[0].task, tasks[0].name);
    assert_eq!((records[0].epsilon, records[1].epsilon), (1.0, 4.0));
    let mean = |eps: f64| {
        let rs: Vec<f64> = records.iter().filter(|r| r.epsilon == eps).filter_map(|r| r.expensive_ratio()).collect();
        rs.iter().sum::<f64>() / rs.len() as f64
    };
    assert!(mean(4.0) <= mean(1.0));
}

#[test]
fn indifferent_ratio_is_one() {
    let tasks = common::random_tasks(&RandomTaskParams::default(), 100, 20);
    let mut g = grid(&[1.0, 2.0, 4.0], &[Algorithm::Indifferent]);
    g.p1 = vec![0.25, 1.0];
    g.p2 = vec![0.5];
    for r in run_grid(&tasks, &g, &BenchOptions::default()) {
        assert!(r.expensive_ratio().is_none_or(|x| x == 1.0), "{r:?}");
    }
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let tasks = common::random_tasks(&RandomTaskParams::default(), 200, 8);
    let mut g = grid(&[1.0, 1.5, 3.0], &Algorithm::ALL);
    g.p3 = vec![0.5];
    g.seeds = vec![1, 2];
    let a = to_csv(&run_grid(&tasks, &g, &BenchOptions::default()));
    let b = to_csv(&run_grid(&tasks, &g, &BenchOptions::default()));
    assert_eq!(a, b);
    assert!(a.starts_with(CSV_HEADER));
    assert!(!a.contains('\r'));
    assert_eq!(a.lines().count(), 1 + 8 * 3 * 4 * 2);
    for line in a.lines() {
        assert_eq!(line.split(',').count(), 19, "{line}");
    }
}

#[test]
fn unsolvable_rows_have_infinite_eta() {
    let tasks: Vec<_> = common::repo_corpus();
    assert!(tasks.iter().all(|t| t.name != "native/unsolvable"), "repo_corpus keeps solvable tasks only");
    let all = estplan::bench::load_corpus(&common::corpus_dir()).unwrap();
    let unsolvable: Vec<_> = all.into_iter().filter(|t| t.name == "native/unsolvable").collect();
    let records = run_grid(&unsolvable, &grid(&[1.0], &[Algorithm::Asec]), &BenchOptions::default());
    assert!(records[0].error.is_none());
    assert!(!records[0].success);
    assert!(to_csv(&records).lines().nth(1).unwrap().contains(",false,inf,"));
}

#[test]
fn expensive_ratio_trend_over_epsilon() {
    let tasks = common::random_tasks(&RandomTaskParams::default(), 300, 200);
    let epsilons: Vec<f64> = (0..=12).map(|i| 1.0 + 0.25 * i as f64).collect();
    let records = run_grid(&tasks, &grid(&epsilons, &[Algorithm::Asec]), &BenchOptions::default());
    let table = expensive_ratio_table(&records);
    assert_eq!(table.len(), epsilons.len());
    let ratios: Vec<f64> = table.iter().map(|r| r.mean_ratio.unwrap()).collect();
    let rises: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
    assert!(rises.is_empty() || (rises.len() == 1 && rises[0] <= 0.02), "{ratios:?}");
    let etas = eta_table(&records);
    assert!(etas.iter().all(|r| r.successes == r.runs));
}

#[test]
fn summary_agrees_with_records() {
    let tasks = common::random_tasks(&RandomTaskParams::default(), 700, 40);
    let mut g = grid(&[1.5, 2.0, 3.0], &[Algorithm::AsecEse]);
    g.p1 = vec![0.5, 1.0];
    g.p2 = vec![0.25, 0.75];
    g.p3 = vec![0.25, 0.5];
    let records = run_grid(&tasks, &g, &BenchOptions::default());
    let csv = to_csv(&records);
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    for s in summary_by_epsilon(&records) {
        let at: Vec<&Vec<&str>> = rows.iter().filter(|r| r[4].parse::<f64>().unwrap() == s.epsilon).collect();
        assert_eq!(s.runs, at.len());
        assert_eq!(s.ese_invoked, at.iter().filter(|r| r[14] == "true").count());
        assert_eq!(s.ese_successes, at.iter().filter(|r| r[15] == "true").count());
        let from_csv = 100.0 * at.iter().filter(|r| r[14] == "true").count() as f64 / at.len() as f64;
        assert!((s.ese_invoked_rate() - from_csv).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn generated_tiers_contain_the_true_cost(
        costs in prop::collection::vec(1u32..100, 1..40),
        p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0, p3 in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let base: Vec<f64> = costs.iter().map(|&c| c as f64).collect();
        let probs = TierProbabilities { p1, p2, p3 };
        let (table, oracle) = synthesize_estimators(&base, probs, seed, 2.0).unwrap();
        for (i, &c) in base.iter().enumerate() {
            let id = ActionId(i as u32);
            let tiers = table.set(id).tiers();
            let truth = oracle.cost(id);
            prop_assert!(tiers.iter().all(|t| t.c_min <= truth && truth <= t.c_max));
            if tiers.len() == 1 && tiers[0].c_min == tiers[0].c_max {
                prop_assert_eq!(truth, c);
            } else {
                prop_assert_eq!(truth, 2.0 * c);
                prop_assert_eq!((tiers[0].c_min, tiers[0].c_max, tiers[0].tau_ms), (c, 4.0 * c, 0.0));
                prop_assert!(tiers[1..].iter().all(|t| t.tau_ms == 2.0));
            }
        }
        let again = synthesize_estimators(&base, probs, seed, 2.0).unwrap();
        prop_assert_eq!(again, (table, oracle));
    }
}
