//! Acceptance criteria 1–9, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use robreg::bench::{run_suite, Suite};
use robreg::config::Config;
use robreg::report::{CellSummary, Summary};
use robreg::verify::{
    check_concentration, check_huber, check_inner, check_oracle_weights, check_pipeline, check_rounding, CheckReport,
};

const SEED: u64 = 0;
const REPLICATES: usize = 30;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn summary_of(reports: &[&CheckReport]) -> String {
    reports
        .iter()
        .map(|r| format!("{}: {}/{} failed, {}", r.name, r.failures, r.cases, r.detail))
        .collect::<Vec<_>>()
        .join(" | ")
}

fn within(limit: Duration, elapsed: Duration) -> (bool, String) {
    (
        elapsed < limit,
        format!("{:.1}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()),
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn rounding() -> Outcome {
    let (reports, elapsed) = timed(|| check_rounding(10_000, SEED, None));
    let (fast, time) = within(Duration::from_secs(10), elapsed);
    let ok = reports.iter().all(CheckReport::passed) && reports[0].cases == 10_000;
    Outcome::new(
        ok && fast,
        format!("{time}; {}", summary_of(&[&reports[0], &reports[1]])),
    )
}

fn inner_and_duality() -> (Outcome, Outcome) {
    let ([agree, weak], elapsed) = timed(|| check_inner(200, 50, 20, SEED));
    let (fast, time) = within(Duration::from_secs(300), elapsed);
    // 250 matrices × 4 penalties × 2 radii.
    let c2 = Outcome::new(
        agree.passed() && agree.cases == 2000 && fast,
        format!("{time}; {}", summary_of(&[&agree])),
    );
    let c3 = Outcome::new(weak.passed() && weak.cases == 2000 * 20, summary_of(&[&weak]));
    (c2, c3)
}

fn huber() -> Outcome {
    let (reports, elapsed) = timed(|| check_huber(100, 5, 100, SEED));
    let (fast, time) = within(Duration::from_secs(60), elapsed);
    let refs: Vec<&CheckReport> = reports.iter().collect();
    Outcome::new(
        reports.iter().all(CheckReport::passed) && fast,
        format!("{time}; {}", summary_of(&refs)),
    )
}

fn suite_config() -> Config {
    let mut config = Config::default();
    config.bench.replicates = REPLICATES;
    config.bench.seed = SEED;
    config.output.record_timings = false;
    config
}

fn run(suite: Suite) -> (Summary, usize, Duration) {
    let (report, elapsed) = timed(|| run_suite(suite, &suite_config()).expect("suite runs"));
    let errored = report.rows.iter().filter(|r| r.error.is_some()).count();
    (report.summary, errored, elapsed)
}

fn n_scaling() -> Outcome {
    let (summary, errored, elapsed) = run(Suite::NScaling);
    let (fast, time) = within(Duration::from_secs(30 * 60), elapsed);
    let mut ok = fast && errored == 0;
    let mut parts = vec![time];
    for law in ["gaussian", "student_t"] {
        match summary
            .n_slopes
            .iter()
            .find(|f| f.covariate_law == law && f.estimator == "robust")
        {
            Some(f) => {
                ok &= (-0.65..=-0.35).contains(&f.fit.slope);
                parts.push(format!("{law} slope {:.3} (R^2 {:.3})", f.fit.slope, f.fit.r_squared));
            }
            None => {
                ok = false;
                parts.push(format!("{law}: no fit"));
            }
        }
    }
    parts.push(format!("band [-0.65, -0.35], {errored} errored rows"));
    Outcome::new(ok, parts.join("; "))
}

fn median_at(cells: &[CellSummary], estimator: &str, o: usize) -> Option<f64> {
    cells
        .iter()
        .find(|c| c.estimator == estimator && c.o == o)
        .and_then(|c| c.median_l2_error)
}

fn o_scaling() -> Outcome {
    let (summary, errored, elapsed) = run(Suite::OScaling);
    let (fast, time) = within(Duration::from_secs(30 * 60), elapsed);
    let robust0 = median_at(&summary.cells, "robust", 0);
    let robust100 = median_at(&summary.cells, "robust", 100);
    let lasso100 = median_at(&summary.cells, "lasso", 100);
    let fit = summary.o_fits.iter().find(|f| f.estimator == "robust");
    let (Some(r0), Some(r100), Some(l100), Some(fit)) = (robust0, robust100, lasso100, fit) else {
        return Outcome::new(false, format!("{time}; missing medians or fit, {errored} errored rows"));
    };
    let a = r100 <= 3.0 * r0;
    let b = l100 >= 3.0 * r100;
    let c = fit.fit.r_squared >= 0.7;
    Outcome::new(
        a && b && c && fast && errored == 0,
        format!(
            "{time}; (a) robust o=100/o=0 = {:.3} (<= 3) {}; (b) lasso/robust at o=100 = {:.2} (>= 3) {}; \
             (c) R^2 vs sqrt(o/n) = {:.3} (>= 0.7) {}; {errored} errored rows",
            r100 / r0,
            mark(a),
            l100 / r100,
            mark(b),
            fit.fit.r_squared,
            mark(c)
        ),
    )
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn oracle_weights() -> Outcome {
    let r = check_oracle_weights(100, SEED);
    Outcome::new(r.passed() && r.cases == 100, summary_of(&[&r]))
}

fn concentration() -> Outcome {
    let r = check_concentration(200, SEED);
    Outcome::new(r.passed() && r.cases == 200, summary_of(&[&r]))
}

fn pipeline() -> Outcome {
    let reports = check_pipeline(20, SEED);
    let refs: Vec<&CheckReport> = reports.iter().collect();
    Outcome::new(reports.iter().all(|r| r.passed() && r.cases == 20), summary_of(&refs))
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored; a name
    // filter that matches nothing here skips the run.
    if std::env::args()
        .skip(1)
        .any(|a| !a.starts_with('-') && !"acceptance".contains(a.as_str()))
    {
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    let mut report = |id: u32, title: &str, o: Outcome| {
        let status = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        println!("{status}  criterion {id}: {title}: {}", o.detail);
    };
    report(1, "rounding invariant", rounding());
    let (c2, c3) = inner_and_duality();
    report(2, "inner maximization vs brute force", c2);
    report(3, "weak duality", c3);
    report(4, "Huber solver", huber());
    report(5, "n-scaling law", n_scaling());
    report(6, "contamination robustness", o_scaling());
    report(7, "oracle-weight feasibility", oracle_weights());
    report(8, "fixed rank-one concentration", concentration());
    report(9, "pipeline determinism and permutation equivariance", pipeline());
    if failed == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
