mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use robreg_core::linalg::{lambda_max, weighted_gram};
use robreg_core::oracle::{brute_inner_max, brute_inner_max_refined, brute_simplex_min};
use robreg_core::pruning::PrunedMatrix;
use robreg_core::weights::*;
use robreg_core::Matrix;

fn tight() -> InnerControls {
    InnerControls {
        max_iters: 5000,
        gap_tolerance: 1e-9,
        ..InnerControls::default()
    }
}

fn lambdas(s: &Matrix) -> [f64; 4] {
    [0.0, 0.1, 1.0, lambda_max(s).unwrap().max(0.0) + 1.0]
}

#[test]
fn inner_solver_matches_refined_brute_force() {
    let mut rng = rng(11);
    for d in [2usize, 3] {
        for _ in 0..6 {
            let s = random_symmetric(&mut rng, d);
            for lam in lambdas(&s) {
                for r in [0.5f64, 1.0] {
                    let t = r * r;
                    let sol = inner_max(&s, lam, t, &tight()).unwrap();
                    let grid = if d == 2 { 24 } else { 6 };
                    let brute = brute_inner_max_refined(&s, lam, t, grid).unwrap();
                    let tol = 1e-3f64.max(brute.resolution + sol.gap());
                    assert!(
                        (sol.value - brute.value).abs() <= tol,
                        "d={d} λ={lam} r={r}: solver {} brute {} tol {tol}",
                        sol.value,
                        brute.value
                    );
                }
            }
        }
    }
}

#[test]
fn supergradient_method_agrees_with_admm() {
    let mut rng = rng(12);
    for _ in 0..10 {
        let s = random_symmetric(&mut rng, 4);
        let lam = 0.3;
        let a = inner_max(&s, lam, 1.0, &tight()).unwrap();
        let ctrl = InnerControls {
            method: InnerMethod::ProjectedSupergradient,
            max_iters: 20_000,
            ..tight()
        };
        let b = inner_max(&s, lam, 1.0, &ctrl).unwrap();
        // Both values are attained, both bounds are certified.
        assert!(a.value <= b.upper_bound + 1e-9);
        assert!(b.value <= a.upper_bound + 1e-9);
        assert!((a.value - b.value).abs() <= a.gap() + b.gap() + 1e-3);
    }
}

#[test]
fn grid_oracle_is_monotone_in_resolution() {
    let mut rng = rng(13);
    for d in [2usize, 3] {
        let s = random_symmetric(&mut rng, d);
        let mut prev = f64::NEG_INFINITY;
        for grid in [2usize, 4, 8, 16] {
            let v = brute_inner_max(&s, 0.2, 1.0, grid).unwrap();
            assert!(v >= prev - 1e-12, "grid {grid}: {v} < {prev}");
            prev = v;
        }
    }
}

#[test]
fn weight_solver_matches_simplex_oracle() {
    let mut rng = rng(14);
    for case in 0..4 {
        let n = 3 + case % 2;
        let x = gaussian_matrix(&mut rng, n, 2);
        let (lam, t, eps) = (0.1, 1.0, 0.3);
        let oracle = brute_simplex_min(&x, lam, t, eps, 40, 48).unwrap();
        let ctrl = SolverControls {
            max_outer_iters: 2000,
            gap_tolerance: Some(1e-6),
            ..SolverControls::default()
        };
        let sol = compute_weight(&PrunedMatrix::unpruned(x.clone()), lam, 1e300, eps, t, &ctrl).unwrap();
        // The oracle value is attained on a coarse grid of w and M, so it can
        // overshoot the true minimum by the grid error; the solver's certified
        // bounds must bracket it.
        assert!(sol.lower_bound <= oracle.value + 1e-9, "case {case}");
        assert!(
            sol.upper_bound() <= oracle.value + 0.05 * oracle.value.max(1.0),
            "case {case}: solver ub {} oracle {}",
            sol.upper_bound(),
            oracle.value
        );
    }
}

#[test]
fn downweighting_never_loses_to_uniform() {
    let mut rng = rng(15);
    for _ in 0..5 {
        let n = 40;
        let mut x = gaussian_matrix(&mut rng, n, 5);
        for j in 0..5 {
            x[(0, j)] = 25.0;
            x[(1, j)] = -25.0;
        }
        let (lam, t, eps) = (0.2, 1.0, 0.1);
        let ctrl = SolverControls::default();
        let sol = compute_weight(&PrunedMatrix::unpruned(x.clone()), lam, 0.0, eps, t, &ctrl).unwrap();
        let uniform = objective_at(&x, &vec![1.0 / n as f64; n], lam, t, &tight()).unwrap();
        assert!(sol.value <= uniform.value + sol.upper_bound() - sol.lower_bound + 1e-9);
        assert!(sol.w_hat.weights()[0] < 0.5 / n as f64);
        assert!(sol.w_hat.weights()[1] < 0.5 / n as f64);
        assert!(!sol.success);
    }
}

#[test]
fn weight_value_is_homogeneous_in_the_trace_budget() {
    let mut rng = rng(16);
    let x = gaussian_matrix(&mut rng, 30, 4);
    let w = vec![1.0 / 30.0; 30];
    let a = objective_at(&x, &w, 0.1, 1.0, &tight()).unwrap();
    let b = objective_at(&x, &w, 0.1, 4.0, &tight()).unwrap();
    assert!((4.0 * a.value - b.value).abs() <= 4.0 * a.gap() + b.gap() + 1e-9);
}

#[test]
fn weight_solution_fields_are_consistent() {
    let mut rng = rng(17);
    let x = gaussian_matrix(&mut rng, 60, 6);
    let sol = compute_weight(
        &PrunedMatrix::unpruned(x.clone()),
        0.05,
        1.5,
        0.1,
        1.0,
        &SolverControls::default(),
    )
    .unwrap();
    let w = sol.w_hat.weights();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let cap = cap(60, 0.1);
    assert!(w.iter().all(|&v| (0.0..=cap + 1e-15).contains(&v)));
    let cert = sol.certificate.as_ref().unwrap();
    assert!(cert.dual.max_abs() <= 0.05 * (1.0 + 1e-12));
    let gram = weighted_gram(&x, w);
    let recomputed = dual_certificate_bound(&gram, &cert.dual, 0.05, 1.0).unwrap();
    assert!((recomputed - cert.upper_bound).abs() <= 1e-9 * recomputed.max(1.0));
    assert!(sol.lower_bound <= sol.value + 1e-9);
    assert!(sol.value <= sol.upper_bound() + 1e-9);
    assert_eq!(sol.success, sol.value <= sol.tau_suc);
    sol.maximizer.check_invariants().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weak_duality_holds_for_random_duals(seed in any::<u64>(), d in 2usize..6, lam in 0.0f64..2.0, r in 0.2f64..2.0) {
        let mut rng = rng(seed);
        let s = random_symmetric(&mut rng, d);
        let t = r * r;
        let sol = inner_max(&s, lam, t, &InnerControls::default()).unwrap();
        prop_assert!(sol.value >= 0.0);
        prop_assert!(sol.value <= sol.upper_bound + 1e-9);
        for _ in 0..10 {
            let u = random_feasible_dual(&mut rng, d, lam);
            let bound = dual_certificate_bound(&s, &u, lam, t).unwrap();
            prop_assert!(sol.value <= bound + 1e-9, "value {} bound {}", sol.value, bound);
        }
    }

    #[test]
    fn inner_value_decreases_with_penalty(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = rng(seed);
        let s = random_symmetric(&mut rng, d);
        let mut prev_ub = f64::INFINITY;
        for lam in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let sol = inner_max(&s, lam, 1.0, &tight()).unwrap();
            // value(λ) ≤ value(λ') for λ ≥ λ', up to the certified gaps.
            prop_assert!(sol.value <= prev_ub + 1e-9);
            prev_ub = sol.upper_bound;
        }
    }

    #[test]
    fn inner_value_increases_with_radius(seed in any::<u64>(), d in 2usize..5, lam in 0.0f64..1.0) {
        let mut rng = rng(seed);
        let s = random_symmetric(&mut rng, d);
        let small = inner_max(&s, lam, 0.25, &tight()).unwrap();
        let large = inner_max(&s, lam, 1.0, &tight()).unwrap();
        prop_assert!(small.value <= large.upper_bound + 1e-9);
    }

    #[test]
    fn spectrahedron_projection_is_feasible_and_idempotent(seed in any::<u64>(), d in 1usize..6, r in 0.1f64..3.0) {
        let mut rng = rng(seed);
        let a = random_symmetric(&mut rng, d);
        let p = project_spectrahedron(&a, r * r).unwrap();
        p.check_invariants().unwrap();
        prop_assert!(p.matrix().trace() <= r * r * (1.0 + 1e-10));
        prop_assert!(p.matrix().l1_norm() + 1e-10 >= p.matrix().trace());
        let again = project_spectrahedron(p.matrix(), r * r).unwrap();
        prop_assert!(again.matrix().sub(p.matrix()).max_abs() <= 1e-9 * r * r);
    }

    #[test]
    fn simplex_projection_is_feasible(seed in any::<u64>(), n in 1usize..60, eps in 0.0f64..0.49) {
        let mut rng = rng(seed);
        let v: Vec<f64> = (0..n).map(|_| 3.0 * rng.random::<f64>() - 1.0).collect();
        let p = project_truncated_simplex(&v, eps).unwrap();
        let w = p.weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&x| x >= 0.0 && x <= p.cap() + 1e-15));
        // Projection optimality: order of v is preserved.
        for i in 0..n {
            for j in 0..n {
                if v[i] > v[j] {
                    prop_assert!(w[i] >= w[j] - 1e-15);
                }
            }
        }
    }
}
