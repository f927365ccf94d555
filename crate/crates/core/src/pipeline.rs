//! The four-stage estimator: pruning, weight computation, rounding and
//! weighted penalized Huber regression, plus the two baselines.

use alloc::vec::Vec;

use crate::error::Result;
use crate::huber::{self, HuberControls, HuberDiagnostics, HuberObjective};
use crate::linalg::{self, Matrix};
use crate::model::RegressionInstance;
use crate::pruning::{prune_matrix, PrunedMatrix};
use crate::rounding::{round_weights, RoundedWeights};
use crate::tuning::EstimatorConfig;
use crate::weights::{compute_weight, SolverControls, WeightSolution};

/// Monotonic time source in seconds. The core has no clock of its own.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Reports zero for every stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// Wall time per stage, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub pruning: f64,
    pub weights: f64,
    pub rounding: f64,
    pub regression: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.pruning + self.weights + self.rounding + self.regression
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Robust,
    /// Least squares with the same ℓ1 penalty: raw covariates, uniform
    /// weights, and `λ_o` so large that every residual is in the quadratic
    /// branch.
    Lasso,
    /// Huber regression without pruning and with uniform weights.
    HuberLassoUnweighted,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Robust, Estimator::Lasso, Estimator::HuberLassoUnweighted];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Robust => "robust",
            Estimator::Lasso => "lasso",
            Estimator::HuberLassoUnweighted => "huber_lasso_unweighted",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub estimator: Estimator,
    pub beta_hat: Vec<f64>,
    /// Absent for the baselines, which skip the weight stage.
    pub weight_solution: Option<WeightSolution>,
    pub rounded: RoundedWeights,
    pub config: EstimatorConfig,
    /// `‖β̂ − β*‖₂` when the instance carries ground truth.
    pub l2_error: Option<f64>,
    /// The weight stage did not certify success; `β̂` comes from the best
    /// weights found.
    pub failed: bool,
    pub huber: HuberDiagnostics,
    pub stage_timings: StageTimings,
}

fn huber_controls(ctrl: &SolverControls) -> HuberControls {
    HuberControls {
        max_iters: ctrl.huber_max_iters,
        tolerance: ctrl.huber_tolerance,
        record_trace: false,
    }
}

fn l2_error(instance: &RegressionInstance, beta: &[f64]) -> Option<f64> {
    instance.truth().map(|t| {
        let diff: Vec<f64> = beta.iter().zip(&t.beta_star).map(|(a, b)| a - b).collect();
        linalg::norm2(&diff)
    })
}

fn regress(
    y: &[f64],
    x: &Matrix,
    rounded: &RoundedWeights,
    lambda_o: f64,
    lambda_s: f64,
    ctrl: &SolverControls,
) -> Result<(Vec<f64>, HuberDiagnostics)> {
    let n = x.rows() as f64;
    let scale: Vec<f64> = rounded.weights().iter().map(|w| n * w).collect();
    let obj = HuberObjective::new(y, x, &scale, lambda_o, lambda_s)?;
    Ok(huber::solve(&obj, &huber_controls(ctrl)))
}

/// Runs the robust estimator.
pub fn estimate(
    instance: &RegressionInstance,
    config: &EstimatorConfig,
    ctrl: &SolverControls,
    clock: &dyn Clock,
) -> Result<EstimationResult> {
    config.validate()?;
    let t0 = clock.now();
    let pruned = prune_matrix(instance.x(), config.tau_x)?;
    let t1 = clock.now();
    let solution = compute_weight(
        &pruned,
        config.lambda_star,
        config.tau_suc,
        config.epsilon,
        config.trace_budget(),
        ctrl,
    )?;
    let t2 = clock.now();
    let rounded = round_weights(&solution.w_hat);
    let t3 = clock.now();
    let (beta_hat, huber) = regress(
        instance.y(),
        pruned.matrix(),
        &rounded,
        config.lambda_o,
        config.lambda_s,
        ctrl,
    )?;
    let t4 = clock.now();
    Ok(EstimationResult {
        estimator: Estimator::Robust,
        l2_error: l2_error(instance, &beta_hat),
        beta_hat,
        failed: !solution.success,
        weight_solution: Some(solution),
        rounded,
        config: *config,
        huber,
        stage_timings: StageTimings {
            pruning: t1 - t0,
            weights: t2 - t1,
            rounding: t3 - t2,
            regression: t4 - t3,
        },
    })
}

/// Runs the Huber stage alone on given rounded weights and covariates.
pub fn estimate_with_weights(
    instance: &RegressionInstance,
    pruned: &PrunedMatrix,
    rounded: &RoundedWeights,
    config: &EstimatorConfig,
    ctrl: &SolverControls,
) -> Result<(Vec<f64>, HuberDiagnostics)> {
    regress(
        instance.y(),
        pruned.matrix(),
        rounded,
        config.lambda_o,
        config.lambda_s,
        ctrl,
    )
}

/// `λ_o` for the least-squares baseline: every residual along the solver
/// path stays far inside the quadratic branch.
fn lasso_lambda_o(instance: &RegressionInstance) -> f64 {
    let scale = linalg::norm_inf(instance.y()).max(instance.x().max_abs()).max(1.0);
    1e10 * scale / libm::sqrt(instance.n() as f64)
}

/// Runs one of the estimators; the baselines reuse `config.lambda_s`.
pub fn run_estimator(
    estimator: Estimator,
    instance: &RegressionInstance,
    config: &EstimatorConfig,
    ctrl: &SolverControls,
    clock: &dyn Clock,
) -> Result<EstimationResult> {
    let lambda_o = match estimator {
        Estimator::Robust => return estimate(instance, config, ctrl, clock),
        Estimator::Lasso => lasso_lambda_o(instance),
        Estimator::HuberLassoUnweighted => config.lambda_o,
    };
    config.validate()?;
    let t0 = clock.now();
    let rounded = RoundedWeights::uniform(instance.n());
    let (beta_hat, huber) = regress(instance.y(), instance.x(), &rounded, lambda_o, config.lambda_s, ctrl)?;
    let t1 = clock.now();
    let mut used = *config;
    used.lambda_o = lambda_o;
    Ok(EstimationResult {
        estimator,
        l2_error: l2_error(instance, &beta_hat),
        beta_hat,
        weight_solution: None,
        rounded,
        config: used,
        failed: false,
        huber,
        stage_timings: StageTimings {
            regression: t1 - t0,
            ..StageTimings::default()
        },
    })
}
