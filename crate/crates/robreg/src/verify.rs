//! Self-generating invariant suites, each checked against an independent
//! oracle or a closed form.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use robreg_core::datagen::{generate, true_moment_profile, Contamination, CovariateLaw, GeneratorSpec, NoiseLaw};
use robreg_core::huber::{self, soft_threshold, HuberControls, HuberObjective};
use robreg_core::linalg::{cholesky_solve, lambda_max, weighted_gram};
use robreg_core::oracle::{brute_inner_max_refined, finite_diff};
use robreg_core::pruning::prune_matrix;
use robreg_core::rounding::round_with_threshold;
use robreg_core::tuning::{calibrated_config, lambda_star_prime, remark_tau_x, Calibration, ProblemSize};
use robreg_core::weights::{
    cap, compute_weight, dual_certificate_bound, inner_max, project_spectrahedron, project_truncated_simplex,
    InnerControls, TruncatedSimplexPoint,
};
use robreg_core::{compute_rates, estimate, round_weights, Matrix, NoClock, RegressionInstance, SolverControls};
use serde::Serialize;

use crate::bench::bench_controls;
use crate::config::{ModeName, TuningConfig};
use crate::instance_io::{instance_csv, parse_instance_csv};
use crate::report::{rows_from_csv, rows_to_csv, ReplicateRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed violation (or discrepancy) in the check's own units.
    pub worst: f64,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            worst: 0.0,
            detail: String::new(),
        }
    }

    /// Records one case whose violation is `excess` (positive means failure).
    fn record(&mut self, excess: f64) {
        self.cases += 1;
        if excess > 0.0 || excess.is_nan() {
            self.failures += 1;
        }
        if excess.is_nan() || excess > self.worst {
            self.worst = excess;
        }
    }

    fn fail(&mut self, message: impl Into<String>) {
        self.cases += 1;
        self.failures += 1;
        if self.detail.is_empty() {
            self.detail = message.into();
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures == 0
    }
}

/// Deliberate defects for exercising the suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Round at `2/n` instead of `1/(2n)`.
    RoundingThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub rounding_points: usize,
    pub inner_d2: usize,
    pub inner_d3: usize,
    pub duals_per_instance: usize,
    pub projections: usize,
    pub huber_1d: usize,
    pub huber_recovery: usize,
    pub huber_gradient: usize,
    pub prop2_replicates: usize,
    pub oracle_weight_replicates: usize,
    pub datagen_instances: usize,
    pub pipeline_instances: usize,
    pub csv_rows: usize,
}

impl Counts {
    /// The sizes of the acceptance criteria.
    pub const FULL: Counts = Counts {
        rounding_points: 10_000,
        inner_d2: 200,
        inner_d3: 50,
        duals_per_instance: 20,
        projections: 200,
        huber_1d: 100,
        huber_recovery: 5,
        huber_gradient: 100,
        prop2_replicates: 200,
        oracle_weight_replicates: 100,
        datagen_instances: 20,
        pipeline_instances: 20,
        csv_rows: 200,
    };

    /// Same suites at a size that runs in seconds.
    pub const QUICK: Counts = Counts {
        rounding_points: 10_000,
        inner_d2: 40,
        inner_d3: 4,
        duals_per_instance: 20,
        projections: 100,
        huber_1d: 100,
        huber_recovery: 3,
        huber_gradient: 100,
        prop2_replicates: 50,
        oracle_weight_replicates: 10,
        datagen_instances: 6,
        pipeline_instances: 3,
        csv_rows: 100,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub counts: Counts,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            counts: Counts::QUICK,
            fault: None,
        }
    }
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(salt);
    r
}

fn random_symmetric(rng: &mut impl Rng, d: usize) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v: f64 = rng.sample(StandardNormal);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A point of the truncated simplex drawn from one of several shapes:
/// projected skewed noise, an extreme point, or a uniform-plus-noise mix.
pub fn random_truncated_point(rng: &mut impl Rng, n: usize, epsilon: f64) -> TruncatedSimplexPoint {
    match rng.random_range(0..3) {
        0 => {
            let power = rng.random_range(1.0..6.0);
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powf(power)).collect();
            project_truncated_simplex(&raw, epsilon).expect("valid epsilon")
        }
        1 => {
            // Fill entries at the cap in random order, remainder last.
            let c = cap(n, epsilon);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut w = vec![0.0; n];
            let mut left = 1.0f64;
            for &i in &order {
                let v = c.min(left);
                w[i] = v;
                left -= v;
                if left <= 0.0 {
                    break;
                }
            }
            project_truncated_simplex(&w, epsilon).expect("valid epsilon")
        }
        _ => {
            let spread = rng.random::<f64>();
            let raw: Vec<f64> = (0..n)
                .map(|_| 1.0 + spread * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            project_truncated_simplex(&raw, epsilon).expect("valid epsilon")
        }
    }
}

/// Zeroed-count bound and per-entry rounding rule over random points with
/// `n ∈ {5, 50, 500}` and `ε ∈ {1/n, 0.1, 0.3, 0.49}`.
pub fn check_rounding(points: usize, seed: u64, fault: Option<Fault>) -> [CheckReport; 2] {
    let mut bound = CheckReport::new("rounding_zeroed_at_most_2n_eps");
    let mut entries = CheckReport::new("rounding_entries");
    let mut rng = rng(seed, 1);
    let grid: Vec<(usize, f64)> = [5usize, 50, 500]
        .into_iter()
        .flat_map(|n| [1.0 / n as f64, 0.1, 0.3, 0.49].into_iter().map(move |e| (n, e)))
        .collect();
    for k in 0..points {
        let (n, eps) = grid[k % grid.len()];
        let w = random_truncated_point(&mut rng, n, eps);
        let nf = n as f64;
        let rounded = match fault {
            Some(Fault::RoundingThreshold) => round_with_threshold(&w, 2.0 / nf),
            None => round_weights(&w),
        };
        let limit = 2.0 * nf * eps;
        bound.record(rounded.zeroed_count() as f64 - limit * (1.0 + 1e-12));
        let mut worst = f64::NEG_INFINITY;
        for (wi, vi) in w.weights().iter().zip(rounded.weights()) {
            let keep = *wi >= 1.0 / (2.0 * nf);
            let expected = if keep { 1.0 / nf } else { 0.0 };
            let rule = if *vi == expected { 0.0 } else { 1.0 };
            worst = worst.max(rule).max(vi - 2.0 * wi);
        }
        entries.record(worst);
    }
    bound.detail = format!("{points} points, n in {{5, 50, 500}}, eps in {{1/n, 0.1, 0.3, 0.49}}");
    entries.detail = "w'_i in {0, 1/n}, kept iff w_i >= 1/(2n), w'_i <= 2 w_i".into();
    [bound, entries]
}

fn tight_inner() -> InnerControls {
    InnerControls {
        max_iters: 5000,
        gap_tolerance: 1e-9,
        ..InnerControls::default()
    }
}

/// Inner solver against the brute-force oracle, and weak duality at random
/// feasible dual matrices, for `λ ∈ {0, 0.1, 1, λ_max + 1}`, `r ∈ {0.5, 1}`.
pub fn check_inner(d2: usize, d3: usize, duals: usize, seed: u64) -> [CheckReport; 2] {
    let mut agree = CheckReport::new("inner_solver_vs_brute_force");
    let mut weak = CheckReport::new("weak_duality");
    let mut widest = 0.0f64;
    let mut rng = rng(seed, 2);
    for (d, count) in [(2usize, d2), (3, d3)] {
        for _ in 0..count {
            let s = random_symmetric(&mut rng, d);
            // λ_max(S) + 1 clamped at 1 so the penalty stays nonnegative.
            let top = lambda_max(&s).expect("symmetric").max(0.0);
            for lam in [0.0, 0.1, 1.0, top + 1.0] {
                for r in [0.5f64, 1.0] {
                    let t = r * r;
                    let (sol, brute) = match (
                        inner_max(&s, lam, t, &tight_inner()),
                        brute_inner_max_refined(&s, lam, t, if d == 2 { 24 } else { 6 }),
                    ) {
                        (Ok(a), Ok(b)) => (a, b),
                        (Err(e), _) | (_, Err(e)) => {
                            agree.fail(format!("d={d}: {e}; "));
                            continue;
                        }
                    };
                    let tol = 1e-3f64.max(brute.resolution + sol.gap());
                    let excess = (sol.value - brute.value).abs() - tol;
                    widest = widest.max(brute.resolution);
                    if excess > 0.0 && agree.detail.is_empty() {
                        agree.detail = format!(
                            "d={d} lambda={lam} r={r}: solver {} brute {} tol {tol}; ",
                            sol.value, brute.value
                        );
                    }
                    agree.record(excess);
                    for _ in 0..duals {
                        let mut u = Matrix::zeros(d, d);
                        for i in 0..d {
                            for j in i..d {
                                let v = lam * (2.0 * rng.random::<f64>() - 1.0);
                                u[(i, j)] = v;
                                u[(j, i)] = v;
                            }
                        }
                        match dual_certificate_bound(&s, &u, lam, t) {
                            Ok(b) => weak.record(sol.value.max(brute.value) - b - 1e-9),
                            Err(e) => weak.fail(e.to_string()),
                        }
                    }
                }
            }
        }
    }
    agree.detail += &format!(
        "{d2} d=2 and {d3} d=3 matrices, tolerance max(1e-3, oracle width + gap), widest oracle interval {widest:.1e}"
    );
    weak.detail = format!("{duals} random |U_ij| <= lambda per solve, slack 1e-9");
    [agree, weak]
}

/// Feasibility and the variational inequality of both projections.
pub fn check_projections(count: usize, seed: u64) -> [CheckReport; 2] {
    let mut spec = CheckReport::new("spectrahedron_projection");
    let mut simp = CheckReport::new("simplex_projection");
    let mut rng = rng(seed, 3);
    for _ in 0..count {
        let d = rng.random_range(2..7);
        let t = rng.random_range(0.1..3.0);
        let a = random_symmetric(&mut rng, d).scale(rng.random_range(0.1..4.0));
        match project_spectrahedron(&a, t) {
            Ok(p) => {
                let mut worst = if p.check_invariants().is_ok() { 0.0 } else { 1.0 };
                let pm = p.matrix();
                // ⟨A − P, Q − P⟩ ≤ 0 for feasible Q.
                for _ in 0..5 {
                    let g = gaussian_matrix(&mut rng, d, d);
                    let q = weighted_gram(&g.transpose(), &vec![1.0; d]);
                    let q = q.scale(rng.random::<f64>() * t / q.trace().max(1e-300));
                    let v = a.sub(pm).frobenius_dot(&q.sub(pm));
                    worst = f64::max(worst, v - 1e-9 * (1.0 + a.frobenius_norm() * t));
                }
                spec.record(worst);
            }
            Err(e) => spec.fail(e.to_string()),
        }

        let n = rng.random_range(2..40);
        let eps = rng.random_range(0.0..0.49);
        let v: Vec<f64> = (0..n).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        match project_truncated_simplex(&v, eps) {
            Ok(p) => {
                let w = p.weights();
                let c = cap(n, eps);
                let sum: f64 = w.iter().sum();
                let mut worst = (sum - 1.0).abs() - 1e-12;
                for &wi in w {
                    worst = worst.max(-wi).max(wi - c * (1.0 + 1e-12));
                }
                for _ in 0..5 {
                    let q = random_truncated_point(&mut rng, n, eps);
                    let ip: f64 = (0..n).map(|i| (v[i] - w[i]) * (q.weights()[i] - w[i])).sum();
                    worst = worst.max(ip - 1e-9);
                }
                simp.record(worst);
            }
            Err(e) => simp.fail(e.to_string()),
        }
    }
    spec.detail = format!("{count} random symmetric inputs, d in 2..7");
    simp.detail = format!("{count} random vectors, n in 2..40");
    [spec, simp]
}

fn huber_controls() -> HuberControls {
    HuberControls {
        max_iters: 50_000,
        tolerance: 1e-12,
        record_trace: false,
    }
}

/// Closed-form soft threshold, least-squares recovery, and gradient checks.
pub fn check_huber(one_d: usize, recovery: usize, gradient: usize, seed: u64) -> [CheckReport; 3] {
    let mut soft = CheckReport::new("huber_1d_soft_threshold");
    let mut rec = CheckReport::new("huber_noiseless_recovery");
    let mut grad = CheckReport::new("huber_gradient_vs_finite_differences");
    let mut rng = rng(seed, 4);

    for _ in 0..one_d {
        let n = rng.random_range(3..40);
        let x = gaussian_matrix(&mut rng, n, 1);
        let y: Vec<f64> = (0..n).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let lambda_s = rng.random::<f64>();
        let ones = vec![1.0; n];
        let obj = HuberObjective::new(&y, &x, &ones, 1e8, lambda_s).expect("valid problem");
        let (beta, _) = huber::solve(&obj, &huber_controls());
        let col = x.column(0);
        let nf = n as f64;
        let expected = soft_threshold(dot(&col, &y) / nf, lambda_s) / (dot(&col, &col) / nf);
        soft.record((beta[0] - expected).abs() - 1e-6);
    }
    soft.detail = "lambda_o = 1e8, tolerance 1e-6".into();

    for _ in 0..recovery {
        let (n, d) = (200, 8);
        let x = gaussian_matrix(&mut rng, n, d);
        let beta_star: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let y = x.mat_vec(&beta_star);
        let ones = vec![1.0; n];
        let obj = HuberObjective::new(&y, &x, &ones, 1.0, 0.0).expect("valid problem");
        let (beta, _) = huber::solve(&obj, &huber_controls());
        match cholesky_solve(&weighted_gram(&x, &ones), &x.tr_mat_vec(&y)) {
            Ok(ls) => {
                let dev = beta.iter().zip(&ls).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                rec.record(dev - 1e-4);
            }
            Err(e) => rec.fail(e.to_string()),
        }
    }
    rec.detail = "n = 200, d = 8, xi = 0, lambda_s = 0, tolerance 1e-4 vs least squares".into();

    let mut tries = 0;
    while grad.cases < gradient && tries < 100 * gradient.max(1) {
        tries += 1;
        let (n, d) = (15, 4);
        let x = gaussian_matrix(&mut rng, n, d);
        let y: Vec<f64> = (0..n).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let scale: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.8 { 1.0 } else { 0.0 })
            .collect();
        let lambda_o = 0.2 + rng.random::<f64>();
        let obj = HuberObjective::new(&y, &x, &scale, lambda_o, 0.3).expect("valid problem");
        let beta: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let k = 1.0 / (lambda_o * (n as f64).sqrt());
        let near_kink = (0..n).any(|i| {
            let r = y[i] - dot(x.row(i), &beta);
            scale[i] != 0.0 && ((r * k).abs() - 1.0).abs() < 0.05
        });
        if near_kink {
            continue;
        }
        let mut g = vec![0.0; d];
        obj.smooth_value_grad(&beta, &mut g);
        let fd = finite_diff(|b| obj.smooth_value(b), &beta, 1e-5);
        let rel = g
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-3))
            .fold(0.0, f64::max);
        grad.record(rel - 1e-5);
    }
    grad.detail = "relative error 1e-5, points within 5% of a kink skipped".into();
    [soft, rec, grad]
}

fn clean_t9(n: usize, d: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        n,
        d,
        s: 5,
        covariate_law: CovariateLaw::StudentT { df: 9.0 },
        correlation: None,
        noise_law: NoiseLaw::Gaussian { scale: 1.0 },
        beta_scale: 1.0,
        contamination: Contamination::None,
        seed,
    }
}

/// Concentration bound for a fixed rank-one `M = r²vvᵀ` on clean pruned data:
/// `(1/n)Σ⟨x̃ᵢx̃ᵢᵀ, M⟩ ≤ λ_*′(ε = 0)·‖M‖₁ + ‖Σ‖_op r²`.
pub fn check_concentration(replicates: usize, seed: u64) -> CheckReport {
    let mut rep = CheckReport::new("concentration_fixed_rank_one");
    let (n, d, delta, r) = (1000usize, 50usize, 0.1, 1.0f64);
    let mut v = vec![0.0; d];
    v[0] = std::f64::consts::FRAC_1_SQRT_2;
    v[1] = std::f64::consts::FRAC_1_SQRT_2;
    let m_l1: f64 = r * r * v.iter().map(|a| a.abs()).sum::<f64>().powi(2);
    let mut holds = 0usize;
    for k in 0..replicates {
        let spec = clean_t9(n, d, seed.wrapping_add(k as u64));
        let outcome = (|| -> robreg_core::Result<bool> {
            let profile = true_moment_profile(&spec)?;
            let g = generate(&spec)?;
            let tau_x = remark_tau_x(n as u64, d as u64, delta)?;
            let rates = compute_rates(n as u64, d as u64, 0, delta, tau_x, profile.sigma_x2)?;
            let pruned = prune_matrix(g.instance.x(), tau_x)?;
            let lhs = r * r * pruned.matrix().row_iter().map(|row| dot(row, &v).powi(2)).sum::<f64>() / n as f64;
            let rhs = lambda_star_prime(&profile, &rates, tau_x, 0.0) * m_l1 + profile.sigma_op_sq() * r * r;
            Ok(lhs <= rhs)
        })();
        match outcome {
            Ok(ok) => holds += usize::from(ok),
            Err(e) => {
                rep.detail = e.to_string();
            }
        }
    }
    // The bound holds with probability 1 − δ; 85% of replicates must satisfy it.
    let required = (0.85 * replicates as f64).ceil() as usize;
    rep.cases = replicates;
    rep.failures = replicates - holds;
    rep.worst = (replicates - holds) as f64 / replicates.max(1) as f64;
    if holds < required || replicates == 0 {
        rep.detail = format!("held in {holds}/{replicates}, need {required}. {}", rep.detail);
        rep.failures = rep.failures.max(1);
    } else {
        rep.failures = 0;
        rep.detail = format!("held in {holds}/{replicates} (need {required}); t9, n = 1000, d = 50, delta = 0.1");
    }
    rep
}

/// Success of the weight stage on clean t9 data with the oracle profile,
/// `λ_* = λ_*′` and `τ_suc = τ_suc′`. The success frequency must reach
/// `0.9 − 1.96·√(0.09/N)`.
pub fn check_oracle_weights(replicates: usize, seed: u64) -> CheckReport {
    let mut rep = CheckReport::new("oracle_weight_feasibility");
    let (n, d, delta) = (1000usize, 50usize, 0.1);
    let controls = bench_controls();
    let mut successes = 0usize;
    let mut errors = Vec::new();
    for k in 0..replicates {
        let spec = clean_t9(n, d, seed.wrapping_add(k as u64));
        let outcome = (|| -> robreg_core::Result<bool> {
            let profile = true_moment_profile(&spec)?;
            let g = generate(&spec)?;
            let size = ProblemSize {
                n,
                d,
                s: spec.s,
                o: 0,
                delta,
                beta_star_l1: None,
            };
            let c = calibrated_config(&profile, &size, &Calibration::default())?;
            if c.lambda_star != c.lambda_star_prime || c.tau_suc != c.tau_suc_prime {
                return Ok(false);
            }
            let pruned = prune_matrix(g.instance.x(), c.tau_x)?;
            let w = compute_weight(
                &pruned,
                c.lambda_star,
                c.tau_suc,
                c.epsilon,
                c.trace_budget(),
                &controls,
            )?;
            Ok(w.success)
        })();
        match outcome {
            Ok(ok) => successes += usize::from(ok),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let slack = 1.96 * (0.09 / replicates.max(1) as f64).sqrt();
    let required = ((0.9 - slack) * replicates as f64).ceil() as usize;
    rep.cases = replicates;
    rep.worst = (replicates - successes) as f64 / replicates.max(1) as f64;
    rep.failures = usize::from(successes < required || replicates == 0 || !errors.is_empty());
    rep.detail = format!(
        "succeeded in {successes}/{replicates} (need {required}); t9, n = 1000, d = 50, delta = 0.1{}",
        errors.first().map(|e| format!("; error: {e}")).unwrap_or_default()
    );
    rep
}

fn random_spec(rng: &mut impl Rng, seed: u64) -> GeneratorSpec {
    let n = rng.random_range(60..200);
    let d = rng.random_range(3..12);
    let o = rng.random_range(0..n / 5);
    let contamination = match rng.random_range(0..4) {
        0 => Contamination::None,
        1 => Contamination::Oblivious { o, magnitude: 50.0 },
        2 => Contamination::Leverage { o, magnitude: 100.0 },
        _ => Contamination::AdaptiveResponse { o },
    };
    let covariate_law = match rng.random_range(0..3) {
        0 => CovariateLaw::Gaussian,
        1 => CovariateLaw::StudentT { df: 9.0 },
        _ => CovariateLaw::SymmetricPareto { tail: 9.0 },
    };
    GeneratorSpec {
        n,
        d,
        s: rng.random_range(1..=d),
        covariate_law,
        correlation: rng.random_bool(0.5).then(|| rng.random_range(0.0..0.8)),
        noise_law: NoiseLaw::StudentT { df: 3.0, scale: 1.0 },
        beta_scale: 1.0,
        contamination,
        seed,
    }
}

/// Outlier count, untouched inliers, and determinism of the generator.
pub fn check_datagen(count: usize, seed: u64) -> CheckReport {
    let mut rep = CheckReport::new("datagen_invariants");
    let mut rng = rng(seed, 5);
    for k in 0..count {
        let spec = random_spec(&mut rng, seed.wrapping_add(k as u64));
        let (a, b) = match (generate(&spec), generate(&spec)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                rep.fail(e.to_string());
                continue;
            }
        };
        let truth = a.instance.truth().expect("synthetic truth");
        let mut bad = f64::from(u8::from(a != b));
        bad += f64::from(u8::from(truth.outliers() != spec.contamination.outliers()));
        for &i in &truth.inlier_set {
            let same_x = a.instance.x().row(i) == a.clean.x().row(i);
            let same_y = a.instance.y()[i].to_bits() == a.clean.y()[i].to_bits();
            if !(same_x && same_y && a.theta[i] == 0.0) {
                bad += 1.0;
            }
        }
        rep.record(bad);
    }
    rep.detail = format!("{count} random specs: |O| = o, inliers bit-identical, reruns identical");
    rep
}

fn pipeline_instance(k: usize, seed: u64) -> robreg_core::Result<(RegressionInstance, GeneratorSpec)> {
    let spec = GeneratorSpec {
        n: 150 + 10 * (k % 5),
        d: 8 + k % 4,
        s: 3,
        covariate_law: if k.is_multiple_of(2) {
            CovariateLaw::Gaussian
        } else {
            CovariateLaw::StudentT { df: 9.0 }
        },
        correlation: None,
        noise_law: NoiseLaw::Gaussian { scale: 1.0 },
        beta_scale: 1.0,
        contamination: Contamination::Oblivious { o: 6, magnitude: 30.0 },
        seed: seed.wrapping_add(k as u64),
    };
    Ok((generate(&spec)?.instance, spec))
}

/// Bitwise determinism and permutation equivariance of the pipeline.
pub fn check_pipeline(count: usize, seed: u64) -> [CheckReport; 2] {
    let mut det = CheckReport::new("pipeline_determinism");
    let mut perm = CheckReport::new("pipeline_permutation_equivariance");
    let mut rng = rng(seed, 6);
    let ctrl = SolverControls {
        huber_tolerance: 1e-12,
        ..bench_controls()
    };
    for k in 0..count {
        let mut run = || -> crate::error::Result<(f64, f64)> {
            let (inst, spec) = pipeline_instance(k, seed)?;
            let cfg = TuningConfig::default()
                .resolve(ModeName::Calibrated, &inst, Some(&spec))?
                .config;
            let a = estimate(&inst, &cfg, &ctrl, &NoClock)?;
            let b = estimate(&inst, &cfg, &ctrl, &NoClock)?;
            let same = a
                .beta_hat
                .iter()
                .map(|v| v.to_bits())
                .eq(b.beta_hat.iter().map(|v| v.to_bits()))
                && a.rounded == b.rounded
                && a.weight_solution.as_ref().map(|w| w.w_hat.weights().to_vec())
                    == b.weight_solution.as_ref().map(|w| w.w_hat.weights().to_vec());
            let mut order: Vec<usize> = (0..inst.n()).collect();
            order.shuffle(&mut rng);
            let c = estimate(&inst.permuted(&order)?, &cfg, &ctrl, &NoClock)?;
            let mut dev = a
                .beta_hat
                .iter()
                .zip(&c.beta_hat)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if a.rounded.permuted(&order) != c.rounded {
                dev = f64::INFINITY;
            }
            Ok((if same { 0.0 } else { 1.0 }, dev))
        };
        match run() {
            Ok((d, p)) => {
                det.record(d);
                perm.record(p - 1e-8);
            }
            Err(e) => {
                det.fail(e.to_string());
                perm.fail(e.to_string());
            }
        }
    }
    det.detail = format!("{count} contaminated instances run twice");
    perm.detail = "beta within 1e-8, rounded weights permuted identically".into();
    [det, perm]
}

/// Report and instance CSV round trips.
pub fn check_csv(count: usize, seed: u64) -> CheckReport {
    let mut rep = CheckReport::new("csv_round_trip");
    let mut rng = rng(seed, 7);
    let rows: Vec<ReplicateRow> = (0..count)
        .map(|k| {
            let failed = rng.random_bool(0.2);
            ReplicateRow {
                suite: "verify".into(),
                cell: k % 7,
                seed: rng.random(),
                n: rng.random_range(1..10_000),
                d: rng.random_range(3..500),
                s: rng.random_range(1..10),
                o: rng.random_range(0..100),
                covariate_law: "student_t".into(),
                contamination: "leverage".into(),
                estimator: "robust".into(),
                l2_error: (!failed).then(|| rng.random::<f64>() * 10f64.powi(rng.random_range(-8..4))),
                success: rng.random(),
                wall_time: rng.random::<f64>(),
                error: failed.then(|| "solver said \"no\", twice".to_owned()),
            }
        })
        .collect();
    match rows_to_csv(&rows).and_then(|t| rows_from_csv(&t)) {
        Ok(back) => rep.record(if back == rows { 0.0 } else { 1.0 }),
        Err(e) => rep.fail(e.to_string()),
    }
    for k in 0..5 {
        let spec = random_spec(&mut rng, seed.wrapping_add(k));
        let ok = generate(&spec).map_err(crate::error::CliError::from).and_then(|g| {
            let text = instance_csv(&g.instance);
            let (y, x, flags) = parse_instance_csv(std::path::Path::new("<memory>"), &text)?;
            let truth = g.instance.truth().expect("synthetic truth");
            let labelled: Vec<usize> = (0..y.len()).filter(|&i| flags[i]).collect();
            Ok(y == g.instance.y() && &x == g.instance.x() && labelled == truth.outlier_set)
        });
        match ok {
            Ok(same) => rep.record(if same { 0.0 } else { 1.0 }),
            Err(e) => rep.fail(e.to_string()),
        }
    }
    rep.detail = format!("{count} report rows and 5 instances");
    rep
}

/// Every suite, in a fixed order.
pub fn run_all(opts: &VerifyOptions) -> Vec<CheckReport> {
    let c = &opts.counts;
    let s = opts.seed;
    let mut out = Vec::new();
    out.extend(check_rounding(c.rounding_points, s, opts.fault));
    out.extend(check_inner(c.inner_d2, c.inner_d3, c.duals_per_instance, s));
    out.extend(check_projections(c.projections, s));
    out.extend(check_huber(c.huber_1d, c.huber_recovery, c.huber_gradient, s));
    out.push(check_concentration(c.prop2_replicates, s));
    out.push(check_oracle_weights(c.oracle_weight_replicates, s));
    out.push(check_datagen(c.datagen_instances, s));
    out.extend(check_pipeline(c.pipeline_instances, s));
    out.push(check_csv(c.csv_rows, s));
    out
}

pub fn format_table(reports: &[CheckReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "{status}  {:width$}  {:>6} cases  {:>5} failures  {}\n",
            r.name, r.cases, r.failures, r.detail
        ));
    }
    out
}
