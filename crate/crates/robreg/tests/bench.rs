//! Benchmark suites at reduced size.

use std::fs;

use robreg::bench::{run_suite, thread_pool, Suite};
use robreg::commands::{bench_paths, cmd_bench};
use robreg::report::{rows_from_csv, Summary};
use robreg::Config;

fn config(replicates: usize) -> Config {
    let mut c = Config::default();
    c.bench.replicates = replicates;
    c.bench.seed = 11;
    c.output.record_timings = false;
    c
}

fn median_of(summary: &Summary, estimator: &str) -> f64 {
    summary
        .cells
        .iter()
        .find(|c| c.estimator == estimator)
        .and_then(|c| c.median_l2_error)
        .unwrap_or_else(|| panic!("no median for {estimator}"))
}

#[test]
fn breakdown_row_count_is_replicates_times_grid() {
    let mut c = config(3);
    c.bench.breakdown_fractions = Some(vec![0.0, 0.1, 0.2]);
    let report = run_suite(Suite::Breakdown, &c).unwrap();
    assert_eq!(report.rows.len(), 3 * 3);
    assert!(report.rows.iter().all(|r| r.error.is_none() && r.l2_error.is_some()));
    assert_eq!(report.summary.cells.len(), 3);
    let os: Vec<usize> = report.summary.cells.iter().map(|c| c.o).collect();
    assert_eq!(os, vec![0, 100, 200]);
}

#[test]
fn without_outliers_robust_and_unweighted_huber_agree() {
    let mut c = config(3);
    c.bench.o_values = Some(vec![0]);
    let report = run_suite(Suite::OScaling, &c).unwrap();
    assert_eq!(report.rows.len(), 3 * 3);
    let robust = median_of(&report.summary, "robust");
    let unweighted = median_of(&report.summary, "huber_lasso_unweighted");
    assert!(
        (robust - unweighted).abs() <= 0.25 * robust.min(unweighted),
        "robust {robust} vs unweighted {unweighted}"
    );
}

#[test]
fn suites_are_deterministic_per_seed_and_thread_count() {
    let mut c = config(2);
    c.bench.breakdown_fractions = Some(vec![0.0, 0.15]);
    let dir = tempfile::tempdir().unwrap();
    let one = thread_pool(Some(1)).unwrap();
    let two = thread_pool(Some(2)).unwrap();
    let a = cmd_bench(Suite::Breakdown, &c, &dir.path().join("a"), false, &one).unwrap();
    let b = cmd_bench(Suite::Breakdown, &c, &dir.path().join("b"), false, &two).unwrap();
    assert_eq!(a, b);
    for (pa, pb) in bench_paths(&dir.path().join("a"), Suite::Breakdown)
        .iter()
        .zip(bench_paths(&dir.path().join("b"), Suite::Breakdown).iter())
    {
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{}", pa.display());
    }
    c.bench.seed += 1;
    let other = run_suite(Suite::Breakdown, &c).unwrap();
    assert_ne!(other.rows, a.rows);
}

#[test]
fn bench_outputs_round_trip_and_are_sorted() {
    let mut c = config(2);
    c.bench.breakdown_fractions = Some(vec![0.0, 0.05]);
    let dir = tempfile::tempdir().unwrap();
    let pool = thread_pool(Some(1)).unwrap();
    let report = cmd_bench(Suite::Breakdown, &c, dir.path(), false, &pool).unwrap();
    let [rows, summary, long] = bench_paths(dir.path(), Suite::Breakdown);
    assert_eq!(rows_from_csv(&fs::read_to_string(&rows).unwrap()).unwrap(), report.rows);
    let parsed: Summary = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(parsed, report.summary);
    assert!(fs::read_to_string(&long).unwrap().lines().count() > 1);
    let keys: Vec<(u64, usize)> = report.rows.iter().map(|r| (r.seed, r.cell)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(cmd_bench(Suite::Breakdown, &c, dir.path(), false, &pool).is_err());
    assert!(cmd_bench(Suite::Breakdown, &c, dir.path(), true, &pool).is_ok());
}

#[test]
fn failing_cells_become_error_rows() {
    let mut c = config(2);
    // Every sample an outlier: the estimator cannot be tuned.
    c.bench.breakdown_fractions = Some(vec![0.0, 1.0]);
    let report = run_suite(Suite::Breakdown, &c).unwrap();
    assert_eq!(report.rows.len(), 4);
    for row in &report.rows {
        if row.o == 0 {
            assert!(row.error.is_none());
        } else {
            assert!(row.error.is_some() && row.l2_error.is_none() && !row.success, "{row:?}");
        }
    }
    let cell = report.summary.cells.iter().find(|c| c.o == 1000).unwrap();
    assert_eq!((cell.errored, cell.median_l2_error), (2, None));
}

#[test]
fn default_grids_match_the_acceptance_designs() {
    use robreg::bench::cells;
    let c = Config::default();
    let n: Vec<(usize, usize)> = cells(Suite::NScaling, &c)
        .unwrap()
        .iter()
        .map(|c| (c.spec.n, c.spec.d))
        .collect();
    assert_eq!(n.len(), 8);
    assert!(n.iter().all(|&(_, d)| d == 200));
    let o = cells(Suite::OScaling, &c).unwrap();
    let os: Vec<usize> = o.iter().map(|c| c.spec.contamination.outliers()).collect();
    assert_eq!(os, vec![0, 20, 50, 100]);
    assert!(o
        .iter()
        .all(|c| (c.spec.n, c.spec.d, c.spec.s) == (2000, 100, 5) && c.estimators.len() == 3));
    assert_eq!(cells(Suite::Breakdown, &c).unwrap().len(), 8);
    assert_eq!(cells(Suite::Baselines, &c).unwrap().len(), 8);
}
