use proptest::prelude::*;
use robreg_core::model::compute_rates;
use robreg_core::tuning::*;
use robreg_core::{Error, MomentProfile};

fn gaussian_profile() -> MomentProfile {
    let q = 3f64.powf(0.25);
    MomentProfile::new(
        1.0,
        q,
        105f64.powf(0.125),
        q,
        (2.0 / std::f64::consts::PI).sqrt(),
        1.0,
        1.0,
    )
    .unwrap()
}

fn size(n: usize, o: usize) -> ProblemSize {
    ProblemSize {
        n,
        d: 100,
        s: 5,
        o,
        delta: 0.1,
        beta_star_l1: Some(5.0),
    }
}

proptest! {
    #[test]
    fn lambda_s_bound_is_monotone_in_outliers_and_epsilon(
        n in 100u64..1_000_000, o_frac in 0.0f64..0.2, extra in 0.0f64..0.2, eps in 0.0f64..0.2, deps in 0.0f64..0.2,
    ) {
        let p = gaussian_profile();
        let c = TheoremConstants::default();
        let tau = remark_tau_x(n, 100, 0.1).unwrap();
        let o1 = (n as f64 * o_frac) as u64;
        let o2 = (n as f64 * (o_frac + extra)) as u64;
        let r1 = compute_rates(n, 100, o1, 0.1, tau, 1.0).unwrap();
        let r2 = compute_rates(n, 100, o2, 0.1, tau, 1.0).unwrap();
        let at = |r, e: f64| {
            let lsp = lambda_star_prime(&p, r, tau, e);
            lambda_s_lower(&p, r, tau, lsp, lsp, e, 5, 10.0, &c)
        };
        prop_assert!(at(&r2, eps) >= at(&r1, eps));
        prop_assert!(at(&r1, eps + deps) >= at(&r1, eps));
    }

    #[test]
    fn theorem_config_is_valid_and_consistent(n in 50usize..10_000_000, o_frac in 0.0f64..0.45) {
        let o = (n as f64 * o_frac) as usize;
        let cfg = default_config(&gaussian_profile(), &size(n, o)).unwrap();
        cfg.validate().unwrap();
        prop_assert_eq!(cfg.lambda_star, cfg.lambda_star_prime);
        prop_assert!((cfg.tau_suc_prime - cfg.r * cfg.r / (1.0 - cfg.epsilon)).abs() <= 1e-12 * cfg.tau_suc_prime);
        prop_assert!((cfg.epsilon - o.max(1) as f64 / n as f64).abs() < 1e-15);
        prop_assert!(cfg.lambda_s > 0.0);
    }

    #[test]
    fn calibrated_penalty_shrinks_with_n(n in 100usize..1_000_000) {
        let p = gaussian_profile();
        let cal = Calibration::default();
        let a = calibrated_config(&p, &size(n, 0), &cal).unwrap();
        let b = calibrated_config(&p, &size(4 * n, 0), &cal).unwrap();
        prop_assert!(b.lambda_s < a.lambda_s);
        prop_assert_eq!(a.r, 1.0);
        prop_assert!((a.lambda_o_sqrt_n(n) - cal.c_o * p.sigma_noise).abs() < 1e-12);
    }
}

#[test]
fn side_conditions_hold_at_astronomical_sample_sizes() {
    // The radius decays only like n^{-1/4} through the 1/τ_x² terms, and the
    // theorem's constants are large, so r ≤ 1 needs n near 2^64.
    let cfg = default_config(&gaussian_profile(), &size(usize::MAX, 0)).unwrap();
    let c = cfg.conditions;
    assert_eq!(c.tau_x_condition, Some(true));
    assert_eq!(c.sample_size, Some(true));
    assert!(c.remark_premise);
    assert!(c.epsilon_below_half);
    assert!(c.lambda_sigma_at_most_one);
    assert!(c.r_at_most_one);
    assert!(c.all_satisfied());
}

#[test]
fn side_conditions_are_flagged_not_enforced_at_desk_scale() {
    let cfg = default_config(&gaussian_profile(), &size(1000, 10)).unwrap();
    assert!(!cfg.conditions.all_satisfied());
    assert!(!cfg.conditions.r_at_most_one);
    let mut unknown = size(1000, 10);
    unknown.beta_star_l1 = None;
    let cfg = default_config(&gaussian_profile(), &unknown).unwrap();
    assert_eq!(cfg.conditions.tau_x_condition, None);
    assert!(!cfg.conditions.all_satisfied());
}

#[test]
fn singular_designs_are_rejected() {
    let mut p = gaussian_profile();
    p.lambda_sigma = 0.0;
    assert!(matches!(default_config(&p, &size(100, 0)), Err(Error::SingularGram)));
    assert!(matches!(
        calibrated_config(&p, &size(100, 0), &Calibration::default()),
        Err(Error::SingularGram)
    ));
}

#[test]
fn validation_catches_tampering() {
    let cfg = default_config(&gaussian_profile(), &size(1000, 0)).unwrap();
    let mut bad = cfg;
    bad.lambda_star = 0.5 * cfg.lambda_star_prime;
    assert!(bad.validate().is_err());
    let mut bad = cfg;
    bad.tau_suc *= 2.0;
    assert!(bad.validate().is_err());
    let mut bad = cfg;
    bad.epsilon = 0.5;
    assert!(bad.validate().is_err());
    let mut bad = cfg;
    bad.lambda_o = f64::NAN;
    assert!(bad.validate().is_err());
}
