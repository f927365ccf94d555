//! The inner maximization `sup_{M ⪰ 0, Tr M ≤ t} ⟨S, M⟩ − λ‖M‖₁` and its
//! dual certificates `t·max(λ_max(S − U), 0)` for `‖U‖_∞ ≤ λ`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricEigen};

const SYMMETRY_TOL: f64 = 1e-9;

/// A symmetric PSD matrix with trace at most `trace_budget` (= r²), kept
/// together with its eigen-factorization `M = Σ_k μ_k v_k v_kᵀ` (μ_k > 0).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrahedronPoint {
    matrix: Matrix,
    factors: Vec<(f64, Vec<f64>)>,
    trace_budget: f64,
}

impl SpectrahedronPoint {
    pub fn zero(d: usize, trace_budget: f64) -> Self {
        Self {
            matrix: Matrix::zeros(d, d),
            factors: Vec::new(),
            trace_budget,
        }
    }

    fn from_factors(d: usize, factors: Vec<(f64, Vec<f64>)>, trace_budget: f64) -> Self {
        let mut matrix = Matrix::zeros(d, d);
        for (mu, v) in &factors {
            for i in 0..d {
                let a = mu * v[i];
                if a != 0.0 {
                    linalg::axpy(a, v, matrix.row_mut(i));
                }
            }
        }
        matrix.symmetrize();
        Self {
            matrix,
            factors,
            trace_budget,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn trace_budget(&self) -> f64 {
        self.trace_budget
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    /// Eigenvalues `μ_k > 0` of the stored factorization.
    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.factors.iter().map(|(mu, _)| *mu)
    }

    /// `xᵀ M x = ⟨x xᵀ, M⟩`.
    pub fn contract(&self, x: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|(mu, v)| {
                let p = linalg::dot(v, x);
                mu * p * p
            })
            .sum()
    }

    /// Checks symmetry, PSD-ness (eigenvalues ≥ −1e−9) and the trace budget.
    pub fn check_invariants(&self) -> Result<()> {
        let asym = self.matrix.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let eig = SymmetricEigen::values_only(&self.matrix)?;
        if eig.first().copied().unwrap_or(0.0) < -1e-9 {
            return Err(Error::param("M", "matrix is not positive semidefinite"));
        }
        if self.matrix.trace() > self.trace_budget + 1e-9 {
            return Err(Error::param("M", "trace exceeds the budget"));
        }
        Ok(())
    }
}

fn check_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.all_finite() {
        return Err(Error::NonFinite {
            what: "symmetric matrix",
        });
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

fn check_budget(trace_budget: f64) -> Result<()> {
    if !(trace_budget > 0.0 && trace_budget.is_finite()) {
        return Err(Error::param("r_bound", "trace budget must be positive and finite"));
    }
    Ok(())
}

/// Projects `λ` onto `{μ ≥ 0, Σ μ ≤ t}`: `μ = max(λ − θ, 0)` with the smallest
/// `θ ≥ 0` meeting the budget.
pub(crate) fn project_spectrum(lambda: &[f64], t: f64) -> Vec<f64> {
    let positive: f64 = lambda.iter().map(|l| l.max(0.0)).sum();
    if positive <= t {
        return lambda.iter().map(|l| l.max(0.0)).collect();
    }
    let mut sorted: Vec<f64> = lambda.iter().copied().filter(|l| *l > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &l) in sorted.iter().enumerate() {
        cumulative += l;
        let candidate = (cumulative - t) / (k + 1) as f64;
        if l - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    lambda.iter().map(|l| (l - theta).max(0.0)).collect()
}

/// Frobenius-nearest point of the spectrahedron `{M ⪰ 0, Tr M ≤ t}`.
pub fn project_spectrahedron(a: &Matrix, trace_budget: f64) -> Result<SpectrahedronPoint> {
    check_symmetric(a)?;
    check_budget(trace_budget)?;
    project_unchecked(a, trace_budget)
}

fn project_unchecked(a: &Matrix, t: f64) -> Result<SpectrahedronPoint> {
    let d = a.rows();
    let eig = SymmetricEigen::new(a)?;
    let mu = project_spectrum(&eig.values, t);
    let vectors = eig.vectors.expect("eigenvectors requested");
    let factors = mu
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(k, &m)| (m, vectors.row(k).to_vec()))
        .collect();
    Ok(SpectrahedronPoint::from_factors(d, factors, t))
}

/// Upper bound `t·max(λ_max(S − U), 0)` on the inner value, valid for every
/// symmetric `U` with `‖U‖_∞ ≤ λ`.
pub fn dual_certificate_bound(s: &Matrix, u: &Matrix, lambda_star: f64, trace_budget: f64) -> Result<f64> {
    check_symmetric(s)?;
    check_symmetric(u)?;
    check_budget(trace_budget)?;
    if s.rows() != u.rows() {
        return Err(Error::DimensionMismatch {
            what: "dual matrix dimension",
            expected: s.rows(),
            found: u.rows(),
        });
    }
    let max_entry = u.max_abs();
    if max_entry > lambda_star * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::InfeasibleDual { max_entry, lambda_star });
    }
    certificate_unchecked(s, u, trace_budget)
}

fn certificate_unchecked(s: &Matrix, u: &Matrix, t: f64) -> Result<f64> {
    Ok(t * linalg::lambda_max(&s.sub(u))?.max(0.0))
}

/// Penalized inner objective `⟨S, M⟩ − λ‖M‖₁`.
pub fn inner_objective(s: &Matrix, m: &Matrix, lambda_star: f64) -> f64 {
    s.frobenius_dot(m) - lambda_star * m.l1_norm()
}

/// First-order method used for the inner maximization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerMethod {
    /// ADMM on the splitting `M = Z` (projection step on M, soft-threshold
    /// step on Z). The scaled multiplier is always a feasible dual matrix.
    #[default]
    Admm,
    /// Projected supergradient ascent with steps `c/√k`.
    ProjectedSupergradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerControls {
    pub max_iters: usize,
    /// Stop once certified upper bound minus attained value is at most this.
    pub gap_tolerance: f64,
    pub method: InnerMethod,
    /// Dual bound evaluation period (iterations).
    pub certificate_every: usize,
}

impl Default for InnerControls {
    fn default() -> Self {
        Self {
            max_iters: 300,
            gap_tolerance: 1e-6,
            method: InnerMethod::Admm,
            certificate_every: 5,
        }
    }
}

/// Solver state carried between successive inner solves on nearby `S`.
#[derive(Debug, Clone)]
pub struct InnerWarmStart {
    z: Matrix,
    y: Matrix,
    rho: f64,
    m: Matrix,
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// Attained `⟨S, M⟩ − λ‖M‖₁` at `point`; never negative.
    pub value: f64,
    pub point: SpectrahedronPoint,
    /// Best dual matrix found (`‖U‖_∞ ≤ λ`).
    pub dual: Matrix,
    /// `t·max(λ_max(S − dual), 0)`.
    pub upper_bound: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warm_start: InnerWarmStart,
}

impl InnerSolution {
    pub fn gap(&self) -> f64 {
        (self.upper_bound - self.value).max(0.0)
    }
}

/// `sup_{M ⪰ 0, Tr M ≤ t} ⟨S, M⟩ − λ‖M‖₁`.
///
/// Returns a feasible maximizer estimate, its value, and a dual certificate.
/// If the iteration budget runs out before the gap closes the best iterate is
/// returned with `converged == false`.
pub fn inner_max(s: &Matrix, lambda_star: f64, trace_budget: f64, ctrl: &InnerControls) -> Result<InnerSolution> {
    inner_max_warm(s, lambda_star, trace_budget, ctrl, None)
}

pub fn inner_max_warm(
    s: &Matrix,
    lambda_star: f64,
    trace_budget: f64,
    ctrl: &InnerControls,
    warm: Option<&InnerWarmStart>,
) -> Result<InnerSolution> {
    check_symmetric(s)?;
    check_budget(trace_budget)?;
    if !(lambda_star >= 0.0 && lambda_star.is_finite()) {
        return Err(Error::param("lambda_star", "must be nonnegative and finite"));
    }
    let warm = warm.filter(|w| w.z.rows() == s.rows());
    match ctrl.method {
        InnerMethod::Admm => admm(s, lambda_star, trace_budget, ctrl, warm),
        InnerMethod::ProjectedSupergradient => supergradient(s, lambda_star, trace_budget, ctrl, warm),
    }
}

struct Tracker {
    value: f64,
    point: SpectrahedronPoint,
    dual: Matrix,
    upper: f64,
}

impl Tracker {
    fn new(s: &Matrix, lambda_star: f64, t: f64) -> Result<Self> {
        let d = s.rows();
        // M = 0 is feasible with value 0; the soft-threshold dual
        // U = clip(S, −λ, λ) is feasible.
        let dual = Matrix::from_fn(d, d, |i, j| s[(i, j)].clamp(-lambda_star, lambda_star));
        let upper = certificate_unchecked(s, &dual, t)?;
        Ok(Self {
            value: 0.0,
            point: SpectrahedronPoint::zero(d, t),
            dual,
            upper,
        })
    }

    fn offer_primal(&mut self, s: &Matrix, lambda_star: f64, point: &SpectrahedronPoint) {
        let v = inner_objective(s, point.matrix(), lambda_star);
        if v > self.value {
            self.value = v;
            self.point = point.clone();
        }
    }

    fn offer_dual(&mut self, s: &Matrix, u: Matrix, t: f64) -> Result<()> {
        let bound = certificate_unchecked(s, &u, t)?;
        if bound < self.upper {
            self.upper = bound;
            self.dual = u;
        }
        Ok(())
    }

    fn gap(&self) -> f64 {
        self.upper - self.value
    }
}

fn soft_threshold(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

fn admm(
    s: &Matrix,
    lambda_star: f64,
    t: f64,
    ctrl: &InnerControls,
    warm: Option<&InnerWarmStart>,
) -> Result<InnerSolution> {
    let d = s.rows();
    let mut tracker = Tracker::new(s, lambda_star, t)?;
    if tracker.upper <= ctrl.gap_tolerance {
        let warm_start = warm.cloned().unwrap_or_else(|| InnerWarmStart {
            z: Matrix::zeros(d, d),
            y: Matrix::zeros(d, d),
            rho: 1.0 / t,
            m: Matrix::zeros(d, d),
        });
        return Ok(finish(tracker, true, 0, warm_start));
    }
    let (mut z, mut y, mut rho) = match warm {
        Some(w) => (w.z.clone(), w.y.clone(), w.rho),
        None => (
            Matrix::zeros(d, d),
            Matrix::zeros(d, d),
            (s.max_abs() + lambda_star).max(1e-12) / t,
        ),
    };
    if let Some(w) = warm {
        let point = project_unchecked(&w.m, t)?;
        tracker.offer_primal(s, lambda_star, &point);
    }
    let mut m = Matrix::zeros(d, d);
    let mut converged = false;
    let mut iterations = 0;
    let every = ctrl.certificate_every.max(1);
    for k in 1..=ctrl.max_iters {
        iterations = k;
        let target = Matrix::from_fn(d, d, |i, j| z[(i, j)] - y[(i, j)] + s[(i, j)] / rho);
        let point = project_unchecked(&target, t)?;
        m.clone_from(point.matrix());
        tracker.offer_primal(s, lambda_star, &point);

        let kappa = lambda_star / rho;
        let mut primal_res = 0.0;
        let mut dual_res = 0.0;
        for idx in 0..d * d {
            let mv = m.as_slice()[idx];
            let yv = y.as_slice()[idx];
            let z_old = z.as_slice()[idx];
            let z_new = soft_threshold(mv + yv, kappa);
            z.as_mut_slice()[idx] = z_new;
            y.as_mut_slice()[idx] = yv + mv - z_new;
            primal_res += (mv - z_new) * (mv - z_new);
            dual_res += (z_new - z_old) * (z_new - z_old);
        }
        let primal_res = libm::sqrt(primal_res);
        let dual_res = rho * libm::sqrt(dual_res);

        if k % every == 0 || k == ctrl.max_iters {
            // ρY lies in λ∂‖Z‖₁, hence ‖ρY‖_∞ ≤ λ up to rounding.
            let u = Matrix::from_fn(d, d, |i, j| (rho * y[(i, j)]).clamp(-lambda_star, lambda_star));
            tracker.offer_dual(s, u, t)?;
            if tracker.gap() <= ctrl.gap_tolerance {
                converged = true;
                break;
            }
        }

        // Residual balancing; the scaled multiplier is rescaled with ρ.
        if primal_res > 10.0 * dual_res {
            rho *= 2.0;
            y = y.scale(0.5);
        } else if dual_res > 10.0 * primal_res {
            rho *= 0.5;
            y = y.scale(2.0);
        }
    }
    let warm_start = InnerWarmStart { z, y, rho, m };
    Ok(finish(tracker, converged, iterations, warm_start))
}

fn supergradient(
    s: &Matrix,
    lambda_star: f64,
    t: f64,
    ctrl: &InnerControls,
    warm: Option<&InnerWarmStart>,
) -> Result<InnerSolution> {
    let d = s.rows();
    let mut tracker = Tracker::new(s, lambda_star, t)?;
    let mut m = match warm {
        Some(w) => project_unchecked(&w.m, t)?,
        None => SpectrahedronPoint::zero(d, t),
    };
    tracker.offer_primal(s, lambda_star, &m);
    let scale = t / (s.frobenius_norm() + lambda_star * d as f64).max(1e-300);
    let every = ctrl.certificate_every.max(1);
    let mut converged = tracker.gap() <= ctrl.gap_tolerance;
    let mut iterations = 0;
    let sign = |v: f64| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    if !converged {
        for k in 1..=ctrl.max_iters {
            iterations = k;
            let step = scale / libm::sqrt(k as f64);
            let mm = m.matrix();
            let target = Matrix::from_fn(d, d, |i, j| {
                mm[(i, j)] + step * (s[(i, j)] - lambda_star * sign(mm[(i, j)]))
            });
            m = project_unchecked(&target, t)?;
            tracker.offer_primal(s, lambda_star, &m);
            if k % every == 0 || k == ctrl.max_iters {
                // Subgradient-matched dual: λ·sign(M) on the support,
                // clip(S, −λ, λ) elsewhere.
                let support_tol = 1e-12 * t;
                let mm = m.matrix();
                let u = Matrix::from_fn(d, d, |i, j| {
                    let v = mm[(i, j)];
                    if v.abs() > support_tol {
                        lambda_star * sign(v)
                    } else {
                        s[(i, j)].clamp(-lambda_star, lambda_star)
                    }
                });
                tracker.offer_dual(s, u, t)?;
                if tracker.gap() <= ctrl.gap_tolerance {
                    converged = true;
                    break;
                }
            }
        }
    }
    let warm_start = InnerWarmStart {
        z: m.matrix().clone(),
        y: Matrix::zeros(d, d),
        rho: 1.0 / t,
        m: m.matrix().clone(),
    };
    Ok(finish(tracker, converged, iterations, warm_start))
}

fn finish(tracker: Tracker, converged: bool, iterations: usize, warm_start: InnerWarmStart) -> InnerSolution {
    InnerSolution {
        value: tracker.value,
        point: tracker.point,
        dual: tracker.dual,
        upper_bound: tracker.upper,
        converged,
        iterations,
        warm_start,
    }
}
