//! COMPUTE-WEIGHT: `min_{w ∈ Δ} max_{M ∈ 𝔐_r} Σ w_i⟨x̃_i x̃_iᵀ, M⟩ − λ_*‖M‖₁`.

mod simplex;
mod spectrahedron;

pub use simplex::{cap, min_linear, project_truncated_simplex, TruncatedSimplexPoint};
pub use spectrahedron::{
    dual_certificate_bound, inner_max, inner_max_warm, inner_objective, project_spectrahedron, InnerControls,
    InnerMethod, InnerSolution, InnerWarmStart, SpectrahedronPoint,
};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::pruning::PrunedMatrix;

/// Iteration budgets and tolerances for the weight and regression solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverControls {
    pub max_outer_iters: usize,
    /// Budget for a full inner solve (used for certificates of candidates).
    pub max_inner_iters: usize,
    /// Warm-started inner iterations spent per outer step.
    pub inner_iters_per_outer: usize,
    /// Certified gap at which the outer loop stops. `None` means
    /// `1e-4 · max(1, τ_suc)`.
    pub gap_tolerance: Option<f64>,
    pub inner_method: InnerMethod,
    /// Stop as soon as some candidate is certified below `τ_suc`.
    pub stop_on_success: bool,
    /// The running average of the iterates is certified every this many steps.
    pub evaluate_every: usize,
    pub certificate_every: usize,
    pub huber_max_iters: usize,
    pub huber_tolerance: f64,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self {
            max_outer_iters: 500,
            max_inner_iters: 300,
            inner_iters_per_outer: 20,
            gap_tolerance: None,
            inner_method: InnerMethod::Admm,
            stop_on_success: false,
            evaluate_every: 25,
            certificate_every: 5,
            huber_max_iters: 5000,
            huber_tolerance: 1e-8,
        }
    }
}

impl SolverControls {
    pub fn gap_tolerance_for(&self, tau_suc: f64) -> f64 {
        self.gap_tolerance.unwrap_or(1e-4 * tau_suc.max(1.0))
    }

    fn inner(&self, max_iters: usize, gap_tolerance: f64) -> InnerControls {
        InnerControls {
            max_iters,
            gap_tolerance,
            method: self.inner_method,
            certificate_every: self.certificate_every,
        }
    }
}

/// Dual matrix `U` (‖U‖_∞ ≤ λ_*) and the bound it certifies at `ŵ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub dual: Matrix,
    pub upper_bound: f64,
}

#[derive(Debug, Clone)]
pub struct WeightSolution {
    pub w_hat: TruncatedSimplexPoint,
    /// Attained inner value `⟨S(ŵ), M⟩ − λ_*‖M‖₁` at the returned `M`.
    pub value: f64,
    pub success: bool,
    pub tau_suc: f64,
    pub certificate: Option<Certificate>,
    /// Best lower bound on the saddle value over all `w`.
    pub lower_bound: f64,
    /// Whether the certified gap `upper − lower` closed below the tolerance.
    pub converged: bool,
    pub inner_converged: bool,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub maximizer: SpectrahedronPoint,
}

impl WeightSolution {
    pub fn upper_bound(&self) -> f64 {
        self.certificate.as_ref().map_or(f64::INFINITY, |c| c.upper_bound)
    }
}

struct Candidate {
    w: Vec<f64>,
    sol: InnerSolution,
}

/// Inner value and certificate at a fixed weight vector.
pub fn objective_at(
    x_tilde: &Matrix,
    w: &[f64],
    lambda_star: f64,
    trace_budget: f64,
    ctrl: &InnerControls,
) -> Result<InnerSolution> {
    if w.len() != x_tilde.rows() {
        return Err(Error::DimensionMismatch {
            what: "weight vector length",
            expected: x_tilde.rows(),
            found: w.len(),
        });
    }
    inner_max(&linalg::weighted_gram(x_tilde, w), lambda_star, trace_budget, ctrl)
}

/// Approximately solves the weight program by projected subgradient descent
/// on `w` with warm-started inner solves.
///
/// Every visited weight vector (and the running average of the iterates) is a
/// candidate carrying a dual certificate; the candidate with the smallest
/// certified upper bound is returned. `trace_budget` is `r²`.
pub fn compute_weight(
    x_tilde: &PrunedMatrix,
    lambda_star: f64,
    tau_suc: f64,
    epsilon: f64,
    trace_budget: f64,
    ctrl: &SolverControls,
) -> Result<WeightSolution> {
    let x = x_tilde.matrix();
    let n = x.rows();
    simplex::validate_epsilon(epsilon)?;
    if n == 0 {
        return Err(Error::InfeasibleWeights {
            reason: "empty weight vector",
        });
    }
    if !(lambda_star >= 0.0 && lambda_star.is_finite()) {
        return Err(Error::param("lambda_star", "must be nonnegative and finite"));
    }
    if !(tau_suc >= 0.0 && tau_suc.is_finite()) {
        return Err(Error::param("tau_suc", "must be nonnegative and finite"));
    }
    if !(trace_budget > 0.0 && trace_budget.is_finite()) {
        return Err(Error::param("r_bound", "trace budget must be positive and finite"));
    }
    let gap_tol = ctrl.gap_tolerance_for(tau_suc);
    let step_ctrl = ctrl.inner(ctrl.inner_iters_per_outer.max(1), gap_tol / 2.0);
    let full_ctrl = ctrl.inner(ctrl.max_inner_iters.max(1), gap_tol / 2.0);
    let cap = simplex::cap(n, epsilon);
    let diameter = libm::sqrt(2.0 * cap);

    let mut w = TruncatedSimplexPoint::uniform(n, epsilon)?.into_weights();
    let mut average = alloc::vec![0.0; n];
    let mut averaged = 0usize;
    let mut warm: Option<InnerWarmStart> = None;
    let mut best: Option<Candidate> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut inner_iterations = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut g = alloc::vec![0.0; n];

    let offer = |best: &mut Option<Candidate>, w: &[f64], sol: InnerSolution| {
        let better = best.as_ref().is_none_or(|b| sol.upper_bound < b.sol.upper_bound);
        if better {
            *best = Some(Candidate { w: w.to_vec(), sol });
        }
    };

    for t in 1..=ctrl.max_outer_iters.max(1) {
        iterations = t;
        let s = linalg::weighted_gram(x, &w);
        // The first solve at uniform weights gets the full budget so the
        // baseline candidate is accurately certified.
        let inner_ctrl = if t == 1 { &full_ctrl } else { &step_ctrl };
        let sol = inner_max_warm(&s, lambda_star, trace_budget, inner_ctrl, warm.as_ref())?;
        inner_iterations += sol.iterations;
        warm = Some(sol.warm_start.clone());

        for (gi, row) in g.iter_mut().zip(x.row_iter()) {
            *gi = sol.point.contract(row);
        }
        let penalty = lambda_star * sol.point.matrix().l1_norm();
        lower = lower.max(min_linear(&g, epsilon) - penalty);
        offer(&mut best, &w, sol);

        if t > 1 && t % ctrl.evaluate_every.max(1) == 0 {
            let avg: Vec<f64> = average.iter().map(|a| a / averaged as f64).collect();
            if let Ok(avg) = TruncatedSimplexPoint::new(avg, epsilon) {
                let sol = inner_max_warm(
                    &linalg::weighted_gram(x, avg.weights()),
                    lambda_star,
                    trace_budget,
                    &step_ctrl,
                    warm.as_ref(),
                )?;
                inner_iterations += sol.iterations;
                offer(&mut best, avg.weights(), sol);
            }
        }

        let best_upper = best.as_ref().map_or(f64::INFINITY, |b| b.sol.upper_bound);
        if best_upper - lower <= gap_tol {
            converged = true;
            break;
        }
        if ctrl.stop_on_success && best_upper <= tau_suc {
            break;
        }

        let mean = linalg::pairwise_sum(&g) / n as f64;
        let spread = libm::sqrt(g.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>());
        if spread == 0.0 {
            // The linear model is flat over the simplex: w already minimizes it.
            break;
        }
        let step = diameter / (spread * libm::sqrt(t as f64));
        let moved: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
        w = project_truncated_simplex(&moved, epsilon)?.into_weights();
        linalg::axpy(1.0, &w, &mut average);
        averaged += 1;
    }

    // Final certificates: the running average and a full-budget re-solve of
    // the incumbent.
    if averaged > 0 {
        let avg: Vec<f64> = average.iter().map(|a| a / averaged as f64).collect();
        if let Ok(avg) = TruncatedSimplexPoint::new(avg, epsilon) {
            let sol = objective_at(x, avg.weights(), lambda_star, trace_budget, &full_ctrl)?;
            inner_iterations += sol.iterations;
            offer(&mut best, avg.weights(), sol);
        }
    }
    let mut best = best.expect("at least one outer iteration runs");
    if !best.sol.converged {
        let sol = inner_max_warm(
            &linalg::weighted_gram(x, &best.w),
            lambda_star,
            trace_budget,
            &full_ctrl,
            Some(&best.sol.warm_start),
        )?;
        inner_iterations += sol.iterations;
        if sol.upper_bound <= best.sol.upper_bound {
            best.sol = sol;
        }
    }
    if best.sol.upper_bound - lower <= gap_tol {
        converged = true;
    }

    let Candidate { w, sol } = best;
    let w_hat = TruncatedSimplexPoint::new(w, epsilon)?;
    Ok(WeightSolution {
        w_hat,
        value: sol.value,
        success: sol.value <= tau_suc,
        tau_suc,
        certificate: Some(Certificate {
            dual: sol.dual,
            upper_bound: sol.upper_bound,
        }),
        lower_bound: lower,
        converged,
        inner_converged: sol.converged,
        iterations,
        inner_iterations,
        maximizer: sol.point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_data_is_trivially_successful() {
        let x = PrunedMatrix::unpruned(Matrix::zeros(2, 2));
        let sol = compute_weight(&x, 0.5, 0.0, 0.0, 1.0, &SolverControls::default()).unwrap();
        assert_eq!(sol.value, 0.0);
        assert!(sol.success);
        assert!(sol.converged);
        for w in sol.w_hat.weights() {
            assert_abs_diff_eq!(*w, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn huge_row_is_downweighted() {
        let x = Matrix::from_rows(&[vec![1.0, 0.5], vec![1.0, 0.5], vec![30.0, -20.0]]).unwrap();
        let x = PrunedMatrix::unpruned(x);
        let ctrl = SolverControls::default();
        let sol = compute_weight(&x, 0.0, 1.0, 1.0 / 3.0, 1.0, &ctrl).unwrap();
        let w = sol.w_hat.weights();
        assert!(w[2] < 1e-3, "{w:?}");
        let uniform = objective_at(x.matrix(), &[1.0 / 3.0; 3], 0.0, 1.0, &InnerControls::default()).unwrap();
        assert!(sol.value < uniform.value);
        assert!(sol.upper_bound() >= sol.value);
        assert!(sol.lower_bound <= sol.value + 1e-9);
    }
}
