//! The four subcommands, independent of argument parsing.

use std::io::Write;
use std::path::{Path, PathBuf};

use robreg_core::datagen::generate;
use robreg_core::tuning::{SideConditions, TuningMode};
use robreg_core::{estimate, Clock, EstimationResult, NoClock, SolverControls};
use serde::Serialize;

use crate::bench::{run_suite, BenchReport, Suite};
use crate::clock::InstantClock;
use crate::config::{Config, ModeName, ProfileSource, Tuned};
use crate::error::{CliError, Result};
use crate::instance_io::{read_instance, sidecar_path, write_file, write_instance};
use crate::report::{long_format_csv, rows_to_csv};
use crate::verify::{format_table, run_all, CheckReport, VerifyOptions};

pub const INSTANCE_FILE: &str = "instance.csv";
pub const RESULT_FILE: &str = "result.json";

/// Writes `<out>/instance.csv` and its sidecar; returns the CSV path.
pub fn cmd_generate(config: &Config, out: &Path, force: bool) -> Result<PathBuf> {
    let spec = config.generate.to_spec()?;
    let generated = generate(&spec)?;
    let path = out.join(INSTANCE_FILE);
    write_instance(&path, &generated.instance, Some(&config.generate), force)?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct WeightsDoc<'a> {
    w_hat: &'a [f64],
    w_prime: &'a [f64],
    zeroed: usize,
    value: f64,
    tau_suc: f64,
    upper_bound: f64,
    lower_bound: f64,
    converged: bool,
    iterations: usize,
}

#[derive(Debug, Serialize)]
struct HuberDoc {
    iterations: usize,
    converged: bool,
    objective: f64,
    stationarity: f64,
}

#[derive(Debug, Serialize)]
struct TimingsDoc {
    pruning: f64,
    weights: f64,
    rounding: f64,
    regression: f64,
    total: f64,
}

#[derive(Debug, Serialize)]
struct ConditionsDoc {
    tau_x_condition: Option<bool>,
    sample_size: Option<bool>,
    r_at_most_one: bool,
    remark_premise: bool,
    epsilon_below_half: bool,
    lambda_sigma_at_most_one: bool,
    all_satisfied: bool,
}

impl From<SideConditions> for ConditionsDoc {
    fn from(c: SideConditions) -> Self {
        Self {
            tau_x_condition: c.tau_x_condition,
            sample_size: c.sample_size,
            r_at_most_one: c.r_at_most_one,
            remark_premise: c.remark_premise,
            epsilon_below_half: c.epsilon_below_half,
            lambda_sigma_at_most_one: c.lambda_sigma_at_most_one,
            all_satisfied: c.all_satisfied(),
        }
    }
}

#[derive(Debug, Serialize)]
struct TuningDoc {
    mode: &'static str,
    profile_source: ProfileSource,
    n: usize,
    d: usize,
    s: usize,
    o: usize,
    delta: f64,
    tau_x: f64,
    lambda_star: f64,
    lambda_star_prime: f64,
    tau_suc: f64,
    tau_suc_prime: f64,
    epsilon: f64,
    lambda_o: f64,
    lambda_s: f64,
    r: f64,
    sigma_x2: f64,
    sigma_x4: f64,
    sigma_x8: f64,
    kurtosis_k: f64,
    sigma_noise: f64,
    sigma_op: f64,
    lambda_sigma: f64,
    conditions: ConditionsDoc,
}

impl TuningDoc {
    fn new(t: &Tuned) -> Self {
        let c = &t.config;
        let p = &t.profile;
        Self {
            mode: match c.mode {
                TuningMode::Theorem => "theorem",
                TuningMode::Calibrated(_) => "calibrated",
            },
            profile_source: t.profile_source,
            n: t.size.n,
            d: t.size.d,
            s: t.size.s,
            o: t.size.o,
            delta: t.size.delta,
            tau_x: c.tau_x,
            lambda_star: c.lambda_star,
            lambda_star_prime: c.lambda_star_prime,
            tau_suc: c.tau_suc,
            tau_suc_prime: c.tau_suc_prime,
            epsilon: c.epsilon,
            lambda_o: c.lambda_o,
            lambda_s: c.lambda_s,
            r: c.r,
            sigma_x2: p.sigma_x2,
            sigma_x4: p.sigma_x4,
            sigma_x8: p.sigma_x8,
            kurtosis_k: p.kurtosis_k,
            sigma_noise: p.sigma_noise,
            sigma_op: p.sigma_op,
            lambda_sigma: p.lambda_sigma,
            conditions: c.conditions.into(),
        }
    }
}

#[derive(Debug, Serialize)]
struct SolverDoc {
    max_outer_iters: usize,
    max_inner_iters: usize,
    inner_iters_per_outer: usize,
    gap_tolerance: f64,
    inner_method: &'static str,
    stop_on_success: bool,
    evaluate_every: usize,
    certificate_every: usize,
    huber_max_iters: usize,
    huber_tolerance: f64,
}

impl SolverDoc {
    fn new(c: &SolverControls, tau_suc: f64) -> Self {
        Self {
            max_outer_iters: c.max_outer_iters,
            max_inner_iters: c.max_inner_iters,
            inner_iters_per_outer: c.inner_iters_per_outer,
            gap_tolerance: c.gap_tolerance_for(tau_suc),
            inner_method: match c.inner_method {
                robreg_core::weights::InnerMethod::Admm => "admm",
                robreg_core::weights::InnerMethod::ProjectedSupergradient => "projected_supergradient",
            },
            stop_on_success: c.stop_on_success,
            evaluate_every: c.evaluate_every,
            certificate_every: c.certificate_every,
            huber_max_iters: c.huber_max_iters,
            huber_tolerance: c.huber_tolerance,
        }
    }
}

/// The structured output of `estimate`. Non-finite numbers become `null`.
#[derive(Debug, Serialize)]
struct ResultDoc<'a> {
    estimator: &'static str,
    success: bool,
    failed: bool,
    l2_error: Option<f64>,
    beta_hat: &'a [f64],
    weights: Option<WeightsDoc<'a>>,
    huber: HuberDoc,
    timings: TimingsDoc,
    tuning: TuningDoc,
    solver: SolverDoc,
}

pub fn result_json(result: &EstimationResult, tuned: &Tuned, controls: &SolverControls) -> Result<String> {
    let t = &result.stage_timings;
    let doc = ResultDoc {
        estimator: result.estimator.name(),
        success: !result.failed,
        failed: result.failed,
        l2_error: result.l2_error,
        beta_hat: &result.beta_hat,
        weights: result.weight_solution.as_ref().map(|w| WeightsDoc {
            w_hat: w.w_hat.weights(),
            w_prime: result.rounded.weights(),
            zeroed: result.rounded.zeroed_count(),
            value: w.value,
            tau_suc: w.tau_suc,
            upper_bound: w.upper_bound(),
            lower_bound: w.lower_bound,
            converged: w.converged,
            iterations: w.iterations,
        }),
        huber: HuberDoc {
            iterations: result.huber.iterations,
            converged: result.huber.converged,
            objective: result.huber.objective,
            stationarity: result.huber.stationarity,
        },
        timings: TimingsDoc {
            pruning: t.pruning,
            weights: t.weights,
            rounding: t.rounding,
            regression: t.regression,
            total: t.total(),
        },
        tuning: TuningDoc::new(tuned),
        solver: SolverDoc::new(controls, result.config.tau_suc),
    };
    let mut text =
        serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(format!("cannot serialize result: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Runs the robust estimator on an instance file and writes
/// `<out>/result.json`; returns its path. Tuning defaults to theorem mode.
pub fn cmd_estimate(instance: &Path, config: &Config, out: &Path, force: bool) -> Result<PathBuf> {
    let target = out.join(RESULT_FILE);
    if !force && target.exists() {
        return Err(CliError::WouldOverwrite { path: target });
    }
    let file = read_instance(instance)?;
    let spec = match file.metadata.as_ref().and_then(|m| m.generate.as_ref()) {
        Some(g) => Some(
            g.to_spec()
                .map_err(|e| CliError::Config(format!("{}: [generate]: {e}", sidecar_path(instance).display())))?,
        ),
        None => None,
    };
    let tuned = config
        .tuning
        .resolve(ModeName::Theorem, &file.instance, spec.as_ref())?;
    let controls = config.solver.apply(SolverControls::default());
    let clock = InstantClock::new();
    let clock: &dyn Clock = if config.output.record_timings { &clock } else { &NoClock };
    let result = estimate(&file.instance, &tuned.config, &controls, clock)?;
    write_file(&target, result_json(&result, &tuned, &controls)?.as_bytes(), true)?;
    Ok(target)
}

/// Output files of a suite.
pub fn bench_paths(out: &Path, suite: Suite) -> [PathBuf; 3] {
    let name = suite.name();
    [
        out.join(format!("{name}_replicates.csv")),
        out.join(format!("{name}_summary.json")),
        out.join(format!("{name}_long.csv")),
    ]
}

/// Runs a suite on `pool` and writes its replicate CSV, summary JSON and
/// long-format CSV.
pub fn cmd_bench(
    suite: Suite,
    config: &Config,
    out: &Path,
    force: bool,
    pool: &rayon::ThreadPool,
) -> Result<BenchReport> {
    let paths = bench_paths(out, suite);
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(CliError::WouldOverwrite { path: p.clone() });
        }
    }
    let report = pool.install(|| run_suite(suite, config))?;
    let mut summary = serde_json::to_string_pretty(&report.summary)
        .map_err(|e| CliError::Config(format!("cannot serialize summary: {e}")))?;
    summary.push('\n');
    write_file(&paths[0], rows_to_csv(&report.rows)?.as_bytes(), true)?;
    write_file(&paths[1], summary.as_bytes(), true)?;
    write_file(&paths[2], long_format_csv(&report.summary)?.as_bytes(), true)?;
    Ok(report)
}

/// Runs every invariant suite and writes one line per check to `sink`.
/// Fails with a suite error (exit status 2) if any check fails.
pub fn cmd_verify(
    opts: &VerifyOptions,
    out: Option<&Path>,
    force: bool,
    sink: &mut dyn Write,
) -> Result<Vec<CheckReport>> {
    let reports = run_all(opts);
    sink.write_all(format_table(&reports).as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    if let Some(dir) = out {
        let mut json = serde_json::to_string_pretty(&reports)
            .map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))?;
        json.push('\n');
        write_file(&dir.join("verify.json"), json.as_bytes(), force)?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::Suite(format!("failed checks: {}", failed.join(", "))))
    }
}
