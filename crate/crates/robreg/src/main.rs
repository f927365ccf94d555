use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robreg::bench::{thread_pool, Suite};
use robreg::commands::{cmd_bench, cmd_estimate, cmd_generate, cmd_verify};
use robreg::config::MAX_SEED;
use robreg::verify::{Counts, Fault, VerifyOptions};
use robreg::{Config, Result};

#[derive(Debug, Parser)]
#[command(
    name = "robreg",
    version,
    about = "Robust sparse regression: data generation, estimation, benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the current directory; `verify` writes
    /// verify.json only when given).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed of the configuration (at most 2^63 - 1).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
    seed: Option<u64>,
    /// Worker threads for benchmarks.
    #[arg(long, global = true, env = "ROBREG_THREADS")]
    threads: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic instance (instance.csv plus instance.toml).
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the estimator on an instance and write result.json.
    Estimate {
        /// Instance CSV; its .toml sidecar is read when present.
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a benchmark suite.
    Bench {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant suites; exits with status 2 on any failure.
    Verify {
        /// Use the full acceptance sizes instead of the quick ones.
        #[arg(long)]
        full: bool,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    NScaling,
    OScaling,
    Breakdown,
    Baselines,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::NScaling => Suite::NScaling,
            SuiteArg::OScaling => Suite::OScaling,
            SuiteArg::Breakdown => Suite::Breakdown,
            SuiteArg::Baselines => Suite::Baselines,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    RoundingThreshold,
}

impl Common {
    fn load(&self) -> Result<Config> {
        Config::load_or_default(self.config.as_deref())
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common } => {
            let mut config = common.load()?;
            if let Some(seed) = common.seed {
                config.generate.seed = seed;
            }
            let path = cmd_generate(&config, &common.out_dir(), common.force)?;
            println!("wrote {}", path.display());
        }
        Command::Estimate { instance, common } => {
            let config = common.load()?;
            let path = cmd_estimate(&instance, &config, &common.out_dir(), common.force)?;
            println!("wrote {}", path.display());
        }
        Command::Bench { suite, common } => {
            let mut config = common.load()?;
            if let Some(seed) = common.seed {
                config.bench.seed = seed;
            }
            let pool = thread_pool(common.threads)?;
            let report = cmd_bench(suite.into(), &config, &common.out_dir(), common.force, &pool)?;
            let errored = report.rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "{}: {} rows ({errored} errored) written to {}",
                report.suite.name(),
                report.rows.len(),
                common.out_dir().display()
            );
            for fit in &report.summary.n_slopes {
                println!(
                    "  slope of log median error vs log n [{} {}]: {:.3} (R^2 {:.3})",
                    fit.covariate_law, fit.estimator, fit.fit.slope, fit.fit.r_squared
                );
            }
            for fit in &report.summary.o_fits {
                println!(
                    "  median error vs sqrt(o/n) [{} {}]: coefficient {:.3} (R^2 {:.3})",
                    fit.contamination, fit.estimator, fit.fit.slope, fit.fit.r_squared
                );
            }
        }
        Command::Verify {
            full,
            inject_fault,
            common,
        } => {
            let opts = VerifyOptions {
                seed: common.seed.unwrap_or(0),
                counts: if full { Counts::FULL } else { Counts::QUICK },
                fault: inject_fault.map(|FaultArg::RoundingThreshold| Fault::RoundingThreshold),
            };
            cmd_verify(&opts, common.out.as_deref(), common.force, &mut std::io::stdout())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
