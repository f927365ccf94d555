//! TOML configuration with one section per stage. Every key is optional.

use std::path::Path;

use robreg_core::datagen::{true_moment_profile, Contamination, CovariateLaw, GeneratorSpec, NoiseLaw};
use robreg_core::linalg::norm1;
use robreg_core::tuning::{calibrated_config, default_config_with, Calibration, TheoremConstants};
use robreg_core::weights::InnerMethod;
use robreg_core::{
    estimate_moment_profile, EstimatorConfig, MomentProfile, ProblemSize, RegressionInstance, SolverControls,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub generate: GenerateConfig,
    pub tuning: TuningConfig,
    pub solver: SolverConfig,
    pub bench: BenchConfig,
    pub output: OutputConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateLawName {
    Gaussian,
    StudentT,
    SymmetricPareto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLawName {
    Gaussian,
    StudentT,
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContaminationName {
    None,
    Oblivious,
    Leverage,
    AdaptiveResponse,
}

/// `[generate]`: one synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub covariate_law: CovariateLawName,
    /// Degrees of freedom of Student-t covariates.
    pub df: f64,
    /// Tail index of symmetric Pareto covariates.
    pub tail: f64,
    /// Toeplitz parameter; 0 gives independent coordinates.
    pub correlation: f64,
    pub noise_law: NoiseLawName,
    pub noise_scale: f64,
    pub noise_df: f64,
    pub beta_scale: f64,
    pub contamination: ContaminationName,
    pub o: usize,
    pub magnitude: f64,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            n: 100,
            d: 10,
            s: 2,
            covariate_law: CovariateLawName::Gaussian,
            df: 9.0,
            tail: 9.0,
            correlation: 0.0,
            noise_law: NoiseLawName::Gaussian,
            noise_scale: 1.0,
            noise_df: 3.0,
            beta_scale: 1.0,
            contamination: ContaminationName::None,
            o: 0,
            magnitude: 1000.0,
            seed: 0,
        }
    }
}

/// Largest seed a TOML document can hold.
pub const MAX_SEED: u64 = i64::MAX as u64;

impl GenerateConfig {
    pub fn to_spec(&self) -> Result<GeneratorSpec> {
        if self.seed > MAX_SEED {
            return Err(CliError::Config(format!(
                "generate.seed = {} exceeds {MAX_SEED}",
                self.seed
            )));
        }
        if self.o > self.n {
            return Err(CliError::Config(format!(
                "generate.o = {} exceeds generate.n = {}",
                self.o, self.n
            )));
        }
        if self.contamination == ContaminationName::None && self.o != 0 {
            return Err(CliError::Config(
                "generate.o is nonzero but generate.contamination is \"none\"".into(),
            ));
        }
        let covariate_law = match self.covariate_law {
            CovariateLawName::Gaussian => CovariateLaw::Gaussian,
            CovariateLawName::StudentT => CovariateLaw::StudentT { df: self.df },
            CovariateLawName::SymmetricPareto => CovariateLaw::SymmetricPareto { tail: self.tail },
        };
        let noise_law = match self.noise_law {
            NoiseLawName::Gaussian => NoiseLaw::Gaussian {
                scale: self.noise_scale,
            },
            NoiseLawName::StudentT => NoiseLaw::StudentT {
                df: self.noise_df,
                scale: self.noise_scale,
            },
            NoiseLawName::Laplace => NoiseLaw::Laplace {
                scale: self.noise_scale,
            },
        };
        let (o, magnitude) = (self.o, self.magnitude);
        let contamination = match self.contamination {
            ContaminationName::None => Contamination::None,
            ContaminationName::Oblivious => Contamination::Oblivious { o, magnitude },
            ContaminationName::Leverage => Contamination::Leverage { o, magnitude },
            ContaminationName::AdaptiveResponse => Contamination::AdaptiveResponse { o },
        };
        let spec = GeneratorSpec {
            n: self.n,
            d: self.d,
            s: self.s,
            covariate_law,
            correlation: (self.correlation != 0.0).then_some(self.correlation),
            noise_law,
            beta_scale: self.beta_scale,
            contamination,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Inverse of [`to_spec`](Self::to_spec); unused law parameters keep
    /// their defaults.
    pub fn from_spec(spec: &GeneratorSpec) -> Self {
        let mut c = Self {
            n: spec.n,
            d: spec.d,
            s: spec.s,
            correlation: spec.correlation.unwrap_or(0.0),
            beta_scale: spec.beta_scale,
            seed: spec.seed,
            ..Self::default()
        };
        match spec.covariate_law {
            CovariateLaw::Gaussian => c.covariate_law = CovariateLawName::Gaussian,
            CovariateLaw::StudentT { df } => {
                c.covariate_law = CovariateLawName::StudentT;
                c.df = df;
            }
            CovariateLaw::SymmetricPareto { tail } => {
                c.covariate_law = CovariateLawName::SymmetricPareto;
                c.tail = tail;
            }
        }
        match spec.noise_law {
            NoiseLaw::Gaussian { scale } => {
                c.noise_law = NoiseLawName::Gaussian;
                c.noise_scale = scale;
            }
            NoiseLaw::StudentT { df, scale } => {
                c.noise_law = NoiseLawName::StudentT;
                c.noise_df = df;
                c.noise_scale = scale;
            }
            NoiseLaw::Laplace { scale } => {
                c.noise_law = NoiseLawName::Laplace;
                c.noise_scale = scale;
            }
        }
        match spec.contamination {
            Contamination::None => c.contamination = ContaminationName::None,
            Contamination::Oblivious { o, magnitude } => {
                c.contamination = ContaminationName::Oblivious;
                c.o = o;
                c.magnitude = magnitude;
            }
            Contamination::Leverage { o, magnitude } => {
                c.contamination = ContaminationName::Leverage;
                c.o = o;
                c.magnitude = magnitude;
            }
            Contamination::AdaptiveResponse { o } => {
                c.contamination = ContaminationName::AdaptiveResponse;
                c.o = o;
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Theorem,
    Calibrated,
}

/// Where the moment constants come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    /// Analytic constants when the generator spec is known, else plug-in.
    #[default]
    Auto,
    Oracle,
    Estimated,
}

/// `[tuning]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    /// Theorem mode for `estimate`, calibrated mode for `bench` when unset.
    pub mode: Option<ModeName>,
    pub profile: ProfileSource,
    pub delta: f64,
    /// Assumed sparsity; defaults to the instance's ground truth.
    pub s: Option<usize>,
    /// Assumed outlier count; defaults to the instance's ground truth, else 0.
    pub o: Option<usize>,
    /// Overrides the noise moment of the profile.
    pub sigma_noise: Option<f64>,
    pub c_o: f64,
    pub c_lambda: f64,
    pub c_outlier: f64,
    pub c_s: f64,
    pub big_c_s: f64,
    pub c_suc: f64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        let cal = Calibration::default();
        let th = TheoremConstants::default();
        Self {
            mode: None,
            profile: ProfileSource::Auto,
            delta: 0.1,
            s: None,
            o: None,
            sigma_noise: None,
            c_o: cal.c_o,
            c_lambda: cal.c_lambda,
            c_outlier: cal.c_outlier,
            c_s: th.c_s,
            big_c_s: th.big_c_s,
            c_suc: th.c_suc,
        }
    }
}

impl TuningConfig {
    pub fn calibration(&self) -> Calibration {
        Calibration {
            c_o: self.c_o,
            c_lambda: self.c_lambda,
            c_outlier: self.c_outlier,
        }
    }

    pub fn constants(&self) -> TheoremConstants {
        TheoremConstants {
            c_s: self.c_s,
            big_c_s: self.big_c_s,
            c_suc: self.c_suc,
        }
    }
}

/// Seed of the random directions used by the plug-in kurtosis estimate.
pub const PROFILE_SEED: u64 = 0x5eed;

/// A resolved configuration and where its moment constants came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuned {
    pub config: EstimatorConfig,
    pub profile: MomentProfile,
    pub profile_source: ProfileSource,
    pub size: ProblemSize,
}

impl TuningConfig {
    /// Builds the estimator configuration for `instance`. `spec` enables the
    /// analytic profile; unset `s` and `o` come from the ground truth.
    pub fn resolve(
        &self,
        default_mode: ModeName,
        instance: &RegressionInstance,
        spec: Option<&GeneratorSpec>,
    ) -> Result<Tuned> {
        let source = match (self.profile, spec) {
            (ProfileSource::Auto, Some(_)) | (ProfileSource::Oracle, _) => ProfileSource::Oracle,
            (ProfileSource::Auto, None) | (ProfileSource::Estimated, _) => ProfileSource::Estimated,
        };
        let mut profile = match source {
            ProfileSource::Oracle => {
                let spec = spec.ok_or_else(|| {
                    CliError::Config("tuning.profile = \"oracle\" needs an instance with a generator spec".into())
                })?;
                true_moment_profile(spec)?
            }
            _ => {
                let est = estimate_moment_profile(instance.x(), PROFILE_SEED)?;
                if est.singular_gram {
                    return Err(robreg_core::Error::SingularGram.into());
                }
                est.profile
            }
        };
        if let Some(sigma) = self.sigma_noise {
            profile.sigma_noise = sigma;
        }
        let truth = instance.truth();
        let s = self
            .s
            .or_else(|| truth.map(|t| t.sparsity()).filter(|&s| s > 0))
            .or(spec.map(|g| g.s))
            .ok_or_else(|| CliError::Config("tuning.s is required when the instance has no ground truth".into()))?;
        let o = self.o.or_else(|| truth.map(|t| t.outliers())).unwrap_or(0);
        let size = ProblemSize {
            n: instance.n(),
            d: instance.d(),
            s,
            o,
            delta: self.delta,
            beta_star_l1: truth.map(|t| norm1(&t.beta_star)),
        };
        let config = match self.mode.unwrap_or(default_mode) {
            ModeName::Theorem => default_config_with(&profile, &size, &self.constants())?,
            ModeName::Calibrated => calibrated_config(&profile, &size, &self.calibration())?,
        };
        Ok(Tuned {
            config,
            profile,
            profile_source: source,
            size,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethodName {
    Admm,
    ProjectedSupergradient,
}

/// `[solver]`: unset keys fall back to the command's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_outer_iters: Option<usize>,
    pub max_inner_iters: Option<usize>,
    pub inner_iters_per_outer: Option<usize>,
    pub gap_tolerance: Option<f64>,
    pub inner_method: Option<InnerMethodName>,
    pub stop_on_success: Option<bool>,
    pub evaluate_every: Option<usize>,
    pub certificate_every: Option<usize>,
    pub huber_max_iters: Option<usize>,
    pub huber_tolerance: Option<f64>,
}

impl SolverConfig {
    pub fn apply(&self, base: SolverControls) -> SolverControls {
        SolverControls {
            max_outer_iters: self.max_outer_iters.unwrap_or(base.max_outer_iters),
            max_inner_iters: self.max_inner_iters.unwrap_or(base.max_inner_iters),
            inner_iters_per_outer: self.inner_iters_per_outer.unwrap_or(base.inner_iters_per_outer),
            gap_tolerance: self.gap_tolerance.or(base.gap_tolerance),
            inner_method: match self.inner_method {
                Some(InnerMethodName::Admm) => InnerMethod::Admm,
                Some(InnerMethodName::ProjectedSupergradient) => InnerMethod::ProjectedSupergradient,
                None => base.inner_method,
            },
            stop_on_success: self.stop_on_success.unwrap_or(base.stop_on_success),
            evaluate_every: self.evaluate_every.unwrap_or(base.evaluate_every),
            certificate_every: self.certificate_every.unwrap_or(base.certificate_every),
            huber_max_iters: self.huber_max_iters.unwrap_or(base.huber_max_iters),
            huber_tolerance: self.huber_tolerance.unwrap_or(base.huber_tolerance),
        }
    }
}

/// `[bench]`: replicate count and optional grid overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub replicates: usize,
    /// Replicate `k` uses seed `seed + k`.
    pub seed: u64,
    pub n_values: Option<Vec<usize>>,
    pub o_values: Option<Vec<usize>>,
    pub breakdown_fractions: Option<Vec<f64>>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            replicates: 30,
            seed: 0,
            n_values: None,
            o_values: None,
            breakdown_fractions: None,
        }
    }
}

/// `[output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Off makes every output byte-identical across runs of the same seed.
    pub record_timings: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { record_timings: true }
    }
}
