//! Benchmark suites: grids of generator specs run over seeded replicates.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use robreg_core::datagen::{generate, Contamination, CovariateLaw, GeneratorSpec, NoiseLaw};
use robreg_core::{run_estimator, Estimator, NoClock, SolverControls};

use crate::config::{Config, ModeName};
use crate::error::{CliError, Result};
use crate::report::{summarize, ReplicateRow, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    NScaling,
    OScaling,
    Breakdown,
    Baselines,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::NScaling, Suite::OScaling, Suite::Breakdown, Suite::Baselines];

    pub fn name(self) -> &'static str {
        match self {
            Suite::NScaling => "n_scaling",
            Suite::OScaling => "o_scaling",
            Suite::Breakdown => "breakdown",
            Suite::Baselines => "baselines",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// One grid point; the seed of `spec` is replaced per replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub spec: GeneratorSpec,
    pub estimators: Vec<Estimator>,
}

pub const STUDENT_T_DF: f64 = 9.0;
pub const LEVERAGE_MAGNITUDE: f64 = 1e3;

pub fn law_name(law: CovariateLaw) -> &'static str {
    match law {
        CovariateLaw::Gaussian => "gaussian",
        CovariateLaw::StudentT { .. } => "student_t",
        CovariateLaw::SymmetricPareto { .. } => "symmetric_pareto",
    }
}

fn base_spec(n: usize, d: usize, law: CovariateLaw, contamination: Contamination) -> GeneratorSpec {
    GeneratorSpec {
        n,
        d,
        s: 5,
        covariate_law: law,
        correlation: None,
        noise_law: NoiseLaw::Gaussian { scale: 1.0 },
        beta_scale: 1.0,
        contamination,
        seed: 0,
    }
}

/// The grid of a suite, honoring the overrides in `[bench]`.
pub fn cells(suite: Suite, config: &Config) -> Result<Vec<Cell>> {
    let b = &config.bench;
    let robust = vec![Estimator::Robust];
    let all = Estimator::ALL.to_vec();
    let t9 = CovariateLaw::StudentT { df: STUDENT_T_DF };
    let cells: Vec<Cell> = match suite {
        Suite::NScaling => {
            let ns = b.n_values.clone().unwrap_or_else(|| vec![1000, 2000, 4000, 8000]);
            [CovariateLaw::Gaussian, t9]
                .into_iter()
                .flat_map(|law| {
                    let robust = robust.clone();
                    ns.iter().map(move |&n| Cell {
                        spec: base_spec(n, 200, law, Contamination::None),
                        estimators: robust.clone(),
                    })
                })
                .collect()
        }
        Suite::OScaling => b
            .o_values
            .clone()
            .unwrap_or_else(|| vec![0, 20, 50, 100])
            .into_iter()
            .map(|o| Cell {
                spec: base_spec(
                    2000,
                    100,
                    CovariateLaw::Gaussian,
                    Contamination::Leverage {
                        o,
                        magnitude: LEVERAGE_MAGNITUDE,
                    },
                ),
                estimators: all.clone(),
            })
            .collect(),
        Suite::Breakdown => {
            let n = 1000;
            b.breakdown_fractions
                .clone()
                .unwrap_or_else(|| vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4])
                .into_iter()
                .map(|f| {
                    if !(0.0..=1.0).contains(&f) {
                        return Err(CliError::Config(format!(
                            "bench.breakdown_fractions: {f} is outside [0, 1]"
                        )));
                    }
                    let o = (f * n as f64).round() as usize;
                    Ok(Cell {
                        spec: base_spec(
                            n,
                            50,
                            CovariateLaw::Gaussian,
                            Contamination::Leverage {
                                o,
                                magnitude: LEVERAGE_MAGNITUDE,
                            },
                        ),
                        estimators: robust.clone(),
                    })
                })
                .collect::<Result<_>>()?
        }
        Suite::Baselines => {
            let n = 1000;
            let o = 50;
            let contaminations = [
                Contamination::None,
                Contamination::Oblivious { o, magnitude: 100.0 },
                Contamination::Leverage {
                    o,
                    magnitude: LEVERAGE_MAGNITUDE,
                },
                Contamination::AdaptiveResponse { o },
            ];
            [CovariateLaw::Gaussian, t9]
                .into_iter()
                .flat_map(|law| {
                    let all = all.clone();
                    contaminations.into_iter().map(move |c| Cell {
                        spec: base_spec(n, 50, law, c),
                        estimators: all.clone(),
                    })
                })
                .collect()
        }
    };
    for c in &cells {
        c.spec.validate()?;
    }
    Ok(cells)
}

/// Controls used by every suite unless `[solver]` overrides them.
pub fn bench_controls() -> SolverControls {
    SolverControls {
        max_outer_iters: 100,
        gap_tolerance: Some(1e-2),
        ..SolverControls::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub suite: Suite,
    pub rows: Vec<ReplicateRow>,
    pub summary: Summary,
}

/// Seed of replicate `k`.
pub fn replicate_seed(base: u64, k: usize) -> u64 {
    base.wrapping_add(k as u64)
}

fn failure_rows(suite: Suite, index: usize, cell: &Cell, seed: u64, message: &str) -> Vec<ReplicateRow> {
    cell.estimators
        .iter()
        .map(|&e| {
            row(
                suite,
                index,
                &cell.spec,
                seed,
                e,
                None,
                false,
                0.0,
                Some(message.to_owned()),
            )
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn row(
    suite: Suite,
    cell: usize,
    spec: &GeneratorSpec,
    seed: u64,
    estimator: Estimator,
    l2_error: Option<f64>,
    success: bool,
    wall_time: f64,
    error: Option<String>,
) -> ReplicateRow {
    ReplicateRow {
        suite: suite.name().to_owned(),
        cell,
        seed,
        n: spec.n,
        d: spec.d,
        s: spec.s,
        o: spec.contamination.outliers(),
        covariate_law: law_name(spec.covariate_law).to_owned(),
        contamination: spec.contamination.name().to_owned(),
        estimator: estimator.name().to_owned(),
        l2_error,
        success,
        wall_time,
        error,
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| (*s).to_owned())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".to_owned())
}

/// Every estimator of `cell` on replicate `seed`. Errors and panics become
/// rows with an `error` message.
pub fn run_replicate(suite: Suite, index: usize, cell: &Cell, seed: u64, config: &Config) -> Vec<ReplicateRow> {
    let controls = config.solver.apply(bench_controls());
    let record = config.output.record_timings;
    let body = || -> Result<Vec<ReplicateRow>> {
        let spec = GeneratorSpec { seed, ..cell.spec };
        let generated = generate(&spec)?;
        let tuned = config
            .tuning
            .resolve(ModeName::Calibrated, &generated.instance, Some(&spec))?;
        Ok(cell
            .estimators
            .iter()
            .map(|&e| {
                let start = Instant::now();
                let result = run_estimator(e, &generated.instance, &tuned.config, &controls, &NoClock);
                let wall = if record { start.elapsed().as_secs_f64() } else { 0.0 };
                match result {
                    Ok(r) => row(suite, index, &spec, seed, e, r.l2_error, !r.failed, wall, None),
                    Err(err) => row(suite, index, &spec, seed, e, None, false, wall, Some(err.to_string())),
                }
            })
            .collect())
    };
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(rows)) => rows,
        Ok(Err(e)) => failure_rows(suite, index, cell, seed, &e.to_string()),
        Err(p) => failure_rows(suite, index, cell, seed, &panic_message(p)),
    }
}

/// Runs a suite on the current rayon pool. Rows are sorted by seed, then
/// cell, then estimator, whatever the scheduling.
pub fn run_suite(suite: Suite, config: &Config) -> Result<BenchReport> {
    if config.bench.replicates == 0 {
        return Err(CliError::Config("bench.replicates must be at least 1".into()));
    }
    let grid = cells(suite, config)?;
    let jobs: Vec<(usize, u64)> = (0..config.bench.replicates)
        .flat_map(|k| (0..grid.len()).map(move |c| (c, replicate_seed(config.bench.seed, k))))
        .collect();
    let mut rows: Vec<ReplicateRow> = jobs
        .par_iter()
        .flat_map_iter(|&(c, seed)| run_replicate(suite, c, &grid[c], seed, config))
        .collect();
    let order = |name: &str| Estimator::from_name(name).map_or(usize::MAX, |e| e as usize);
    rows.sort_by_key(|a| (a.seed, a.cell, order(&a.estimator)));
    let summary = summarize(suite.name(), &rows);
    Ok(BenchReport { suite, rows, summary })
}

/// A pool with `threads` workers, or rayon's default when `None`.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))
}
