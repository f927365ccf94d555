//! Tuning parameters: the lower bounds of the main theorem's conditions, and a
//! calibrated variant with practical constants for desk-scale experiments.

use crate::error::{Error, Result};
use crate::model::{compute_rates, MomentProfile, Rates};

/// Numerical constants of the theorem (`c_s ≥ 6`, `C_s ≥ 300`, `c_suc ≥ 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    pub c_s: f64,
    pub big_c_s: f64,
    pub c_suc: f64,
}

impl Default for TheoremConstants {
    fn default() -> Self {
        Self {
            c_s: 6.0,
            big_c_s: 300.0,
            c_suc: 1.0,
        }
    }
}

/// Constants of the calibrated mode.
///
/// `λ_o√n = c_o·σ`, `λ_s = c_lambda·λ_o√n·(r_d + r_δ + c_outlier·r_o)`, and the
/// trace budget is `r = 1`; `τ_x`, `λ_*` and `τ_suc` follow the theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub c_o: f64,
    pub c_lambda: f64,
    pub c_outlier: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            c_o: 3.0,
            c_lambda: 0.3,
            c_outlier: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TuningMode {
    /// Every parameter at the lower bound of its condition.
    Theorem,
    Calibrated(Calibration),
}

/// Which side conditions of the theorem hold. `None` when the check needs
/// population quantities that were not supplied (e.g. `‖β*‖₁`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideConditions {
    /// `τ_x²` dominates the five-term maximum.
    pub tau_x_condition: Option<bool>,
    pub r_at_most_one: bool,
    /// Sample-size form of the `τ_x` condition under the concrete `τ_x`.
    pub sample_size: Option<bool>,
    /// `(√2σ4² + 1 + 2σ4⁴)(r_d + r_δ)√s < (1 − ε)‖Σ^{1/2}‖_op`
    pub remark_premise: bool,
    pub epsilon_below_half: bool,
    pub lambda_sigma_at_most_one: bool,
}

impl SideConditions {
    /// True only if every check is known and satisfied.
    pub fn all_satisfied(&self) -> bool {
        self.tau_x_condition == Some(true)
            && self.sample_size == Some(true)
            && self.r_at_most_one
            && self.remark_premise
            && self.epsilon_below_half
            && self.lambda_sigma_at_most_one
    }
}

/// All tuning parameters of the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub tau_x: f64,
    pub lambda_star: f64,
    pub lambda_star_prime: f64,
    pub tau_suc: f64,
    pub tau_suc_prime: f64,
    pub epsilon: f64,
    pub lambda_o: f64,
    pub lambda_s: f64,
    pub r: f64,
    pub constants: TheoremConstants,
    pub mode: TuningMode,
    pub rates: Rates,
    pub conditions: SideConditions,
}

impl EstimatorConfig {
    /// Trace budget `r²` of the spectrahedron.
    pub fn trace_budget(&self) -> f64 {
        self.r * self.r
    }

    /// `λ_o√n` for `n` samples.
    pub fn lambda_o_sqrt_n(&self, n: usize) -> f64 {
        self.lambda_o * libm::sqrt(n as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau_x", self.tau_x),
            ("lambda_star", self.lambda_star),
            ("lambda_star_prime", self.lambda_star_prime),
            ("tau_suc", self.tau_suc),
            ("tau_suc_prime", self.tau_suc_prime),
            ("epsilon", self.epsilon),
            ("lambda_o", self.lambda_o),
            ("r", self.r),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive and finite"));
            }
        }
        if !(self.lambda_s >= 0.0 && self.lambda_s.is_finite()) {
            return Err(Error::param("lambda_s", "must be nonnegative and finite"));
        }
        if self.epsilon >= 0.5 {
            return Err(Error::param("epsilon", "must be below 1/2"));
        }
        if self.lambda_star < self.lambda_star_prime * (1.0 - 1e-12) {
            return Err(Error::param("lambda_star", "must be at least lambda_star_prime"));
        }
        let want = self.constants.c_suc * self.tau_suc_prime;
        if (self.tau_suc - want).abs() > 1e-12 * want {
            return Err(Error::param("tau_suc", "must equal c_suc * tau_suc_prime"));
        }
        Ok(())
    }
}

/// `λ_*′ = (1/(1−ε)){√2σ4²(r_d+r_δ) + τ_x²(r_d²+r_δ²) + 2σ4⁴/τ_x²}`.
pub fn lambda_star_prime(profile: &MomentProfile, rates: &Rates, tau_x: f64, epsilon: f64) -> f64 {
    let s4_sq = profile.sigma_x4 * profile.sigma_x4;
    let tau_sq = tau_x * tau_x;
    (core::f64::consts::SQRT_2 * s4_sq * (rates.r_d + rates.r_delta)
        + tau_sq * rates.log_term()
        + 2.0 * s4_sq * s4_sq / tau_sq)
        / (1.0 - epsilon)
}

/// `τ_x = (r_d² + r_δ²)^{−1/4}`.
pub fn remark_tau_x(n: u64, d: u64, delta: f64) -> Result<f64> {
    let rates = compute_rates(n, d, 0, delta, 1.0, 1.0)?;
    Ok(libm::pow(rates.log_term(), -0.25))
}

/// `ε = max(o/n, 1/n)`.
pub fn default_epsilon(n: u64, o: u64) -> f64 {
    o.max(1) as f64 / n as f64
}

/// `max{16K‖Σ½‖/λ_Σ², 300K⁴‖Σ½‖⁴(σ+1)/λ_Σ⁴, 4K²‖Σ½‖²}`.
pub fn lambda_o_sqrt_n_lower(profile: &MomentProfile) -> f64 {
    let k = profile.kurtosis_k;
    let op = profile.sigma_op;
    let ls2 = profile.lambda_sigma * profile.lambda_sigma;
    let a = 16.0 * k * op / ls2;
    let b = 300.0 * libm::pow(k * op, 4.0) * (profile.sigma_noise + 1.0) / (ls2 * ls2);
    let c = 4.0 * k * k * op * op;
    a.max(b).max(c)
}

/// Parameters shared by the `λ_s` and `r` bounds.
struct BoundInputs<'a> {
    profile: &'a MomentProfile,
    rates: &'a Rates,
    tau_x: f64,
    lambda_star: f64,
    lambda_star_prime: f64,
    epsilon: f64,
    s: f64,
    c_suc: f64,
}

impl BoundInputs<'_> {
    /// The braced factor `{…}` of the `λ_s` condition.
    fn bracket(&self) -> f64 {
        let p = self.profile;
        let tau_sq = self.tau_x * self.tau_x;
        let s4_sq = p.sigma_x4 * p.sigma_x4;
        let s8_8 = libm::pow(p.sigma_x8, 8.0);
        self.rates.r_ddelta
            + (p.sigma_x2 * s4_sq + s8_8) / tau_sq
            + (libm::sqrt(self.lambda_star) + libm::sqrt(self.lambda_star_prime)) * self.rates.r_o
            + libm::sqrt(self.lambda_star_prime * self.epsilon)
            + p.sigma_op * (libm::sqrt(self.c_suc) * self.rates.r_o + libm::sqrt(self.epsilon)) / libm::sqrt(self.s)
            + 1.0 / tau_sq
    }
}

/// Lower bound on `λ_s`: `c_s·λ_o√n·{…}`.
#[allow(clippy::too_many_arguments)]
pub fn lambda_s_lower(
    profile: &MomentProfile,
    rates: &Rates,
    tau_x: f64,
    lambda_star: f64,
    lambda_star_prime: f64,
    epsilon: f64,
    s: usize,
    lambda_o_sqrt_n: f64,
    constants: &TheoremConstants,
) -> f64 {
    let inputs = BoundInputs {
        profile,
        rates,
        tau_x,
        lambda_star,
        lambda_star_prime,
        epsilon,
        s: s as f64,
        c_suc: constants.c_suc,
    };
    constants.c_s * lambda_o_sqrt_n * inputs.bracket()
}

/// Lower bound on the error radius `r` for a given `λ_s`.
#[allow(clippy::too_many_arguments)]
pub fn r_lower(
    profile: &MomentProfile,
    rates: &Rates,
    tau_x: f64,
    lambda_star: f64,
    lambda_star_prime: f64,
    epsilon: f64,
    s: usize,
    lambda_o_sqrt_n: f64,
    lambda_s: f64,
    constants: &TheoremConstants,
) -> f64 {
    let inputs = BoundInputs {
        profile,
        rates,
        tau_x,
        lambda_star,
        lambda_star_prime,
        epsilon,
        s: s as f64,
        c_suc: constants.c_suc,
    };
    let sqrt_s = libm::sqrt(s as f64);
    let ls2 = profile.lambda_sigma * profile.lambda_sigma;
    // The bracketed term equals √s times the λ_s brace.
    constants.big_c_s * sqrt_s * lambda_s / ls2 + constants.big_c_s * lambda_o_sqrt_n / ls2 * sqrt_s * inputs.bracket()
}

/// Problem sizes and optional population quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSize {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub o: usize,
    pub delta: f64,
    /// `‖β*‖₁`, known only for synthetic data.
    pub beta_star_l1: Option<f64>,
}

fn check_inputs(profile: &MomentProfile, size: &ProblemSize) -> Result<()> {
    if profile.lambda_sigma == 0.0 {
        return Err(Error::SingularGram);
    }
    profile.validate()?;
    if size.n == 0 || size.s == 0 {
        return Err(Error::param("n, s", "must be at least 1"));
    }
    if size.s > size.d {
        return Err(Error::param("s", "cannot exceed d"));
    }
    if let Some(b) = size.beta_star_l1 {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::param("beta_star_l1", "must be nonnegative and finite"));
        }
    }
    Ok(())
}

/// Theorem-mode configuration: the concrete `τ_x`, `ε = max(o/n, 1/n)`,
/// `λ_* = λ_*′`, `τ_suc = c_suc·τ_suc′`, and `λ_o`, `λ_s`, `r` at their lower
/// bounds. Side conditions are reported, never enforced.
pub fn default_config(profile: &MomentProfile, size: &ProblemSize) -> Result<EstimatorConfig> {
    default_config_with(profile, size, &TheoremConstants::default())
}

pub fn default_config_with(
    profile: &MomentProfile,
    size: &ProblemSize,
    constants: &TheoremConstants,
) -> Result<EstimatorConfig> {
    check_inputs(profile, size)?;
    let (n, d, o) = (size.n as u64, size.d as u64, size.o as u64);
    let tau_x = remark_tau_x(n, d, size.delta)?;
    let rates = compute_rates(n, d, o, size.delta, tau_x, profile.sigma_x2)?;
    let epsilon = default_epsilon(n, o);
    let lambda_star_prime = lambda_star_prime(profile, &rates, tau_x, epsilon);
    let lambda_star = lambda_star_prime;
    let lo = lambda_o_sqrt_n_lower(profile);
    let lambda_s = lambda_s_lower(
        profile,
        &rates,
        tau_x,
        lambda_star,
        lambda_star_prime,
        epsilon,
        size.s,
        lo,
        constants,
    );
    let r = r_lower(
        profile,
        &rates,
        tau_x,
        lambda_star,
        lambda_star_prime,
        epsilon,
        size.s,
        lo,
        lambda_s,
        constants,
    );
    let tau_suc_prime = profile.sigma_op_sq() * r * r / (1.0 - epsilon);
    let conditions = side_conditions(profile, size, &rates, tau_x, lo, epsilon, r);
    Ok(EstimatorConfig {
        tau_x,
        lambda_star,
        lambda_star_prime,
        tau_suc: constants.c_suc * tau_suc_prime,
        tau_suc_prime,
        epsilon,
        lambda_o: lo / libm::sqrt(size.n as f64),
        lambda_s,
        r,
        constants: *constants,
        mode: TuningMode::Theorem,
        rates,
        conditions,
    })
}

/// Calibrated configuration for finite samples; see [`Calibration`].
pub fn calibrated_config(
    profile: &MomentProfile,
    size: &ProblemSize,
    calibration: &Calibration,
) -> Result<EstimatorConfig> {
    check_inputs(profile, size)?;
    if !(calibration.c_o > 0.0 && calibration.c_lambda >= 0.0 && calibration.c_outlier >= 0.0) {
        return Err(Error::param(
            "calibration",
            "constants must be nonnegative (c_o positive)",
        ));
    }
    let constants = TheoremConstants::default();
    let (n, d, o) = (size.n as u64, size.d as u64, size.o as u64);
    let tau_x = remark_tau_x(n, d, size.delta)?;
    let rates = compute_rates(n, d, o, size.delta, tau_x, profile.sigma_x2)?;
    let epsilon = default_epsilon(n, o);
    let lambda_star_prime = lambda_star_prime(profile, &rates, tau_x, epsilon);
    let r = 1.0;
    let tau_suc_prime = profile.sigma_op_sq() * r * r / (1.0 - epsilon);
    let lo = calibration.c_o * profile.sigma_noise;
    let lambda_s = calibration.c_lambda * lo * (rates.r_d + rates.r_delta + calibration.c_outlier * rates.r_o);
    let conditions = side_conditions(profile, size, &rates, tau_x, lo, epsilon, r);
    Ok(EstimatorConfig {
        tau_x,
        lambda_star: lambda_star_prime,
        lambda_star_prime,
        tau_suc: constants.c_suc * tau_suc_prime,
        tau_suc_prime,
        epsilon,
        lambda_o: lo / libm::sqrt(size.n as f64),
        lambda_s,
        r,
        constants,
        mode: TuningMode::Calibrated(*calibration),
        rates,
        conditions,
    })
}

fn side_conditions(
    profile: &MomentProfile,
    size: &ProblemSize,
    rates: &Rates,
    tau_x: f64,
    lambda_o_sqrt_n: f64,
    epsilon: f64,
    r: f64,
) -> SideConditions {
    let s = size.s as f64;
    let s4_4 = libm::pow(profile.sigma_x4, 4.0);
    let s8_4 = libm::pow(profile.sigma_x8, 4.0);
    let s8_8 = s8_4 * s8_4;
    let op = profile.sigma_op;
    let ls2 = profile.lambda_sigma * profile.lambda_sigma;
    let k2 = profile.kurtosis_k * profile.kurtosis_k;
    let n = size.n as f64;
    let lo2n = lambda_o_sqrt_n * lambda_o_sqrt_n;

    let tau_x_condition = size.beta_star_l1.map(|b1| {
        let terms = [
            b1 * b1 * s8_8 * op * op / (s * lo2n),
            libm::sqrt(b1 / lambda_o_sqrt_n),
            108.0 * s4_4 * s / ls2,
            libm::pow(b1 * s8_4, 2.0 / 3.0),
            9.0 * s8_4 * s / k2,
        ];
        tau_x * tau_x >= terms.iter().copied().fold(0.0, f64::max)
    });
    let sample_size = size.beta_star_l1.map(|b1| {
        let terms = [
            b1 * b1 * s8_8 * op * op / (s * lo2n),
            b1 / lambda_o_sqrt_n,
            108.0 * s4_4 * s / ls2,
            b1 * s8_4,
            9.0 * s8_4 * s / k2,
            1.0,
        ];
        let lhs = terms.iter().copied().fold(0.0, f64::max) * libm::sqrt(libm::log(size.d as f64 / size.delta));
        lhs <= libm::sqrt(n)
    });
    let s4_2 = profile.sigma_x4 * profile.sigma_x4;
    let remark_premise =
        (core::f64::consts::SQRT_2 * s4_2 + 1.0 + 2.0 * s4_4) * (rates.r_d + rates.r_delta) * libm::sqrt(s)
            < (1.0 - epsilon) * op;
    SideConditions {
        tau_x_condition,
        r_at_most_one: r <= 1.0,
        sample_size,
        remark_premise,
        epsilon_below_half: epsilon < 0.5,
        lambda_sigma_at_most_one: profile.lambda_sigma_at_most_one(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_profile() -> MomentProfile {
        MomentProfile::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn rates_with(r_d: f64, r_delta: f64) -> Rates {
        Rates {
            delta: 0.1,
            r_o: 0.0,
            r_d,
            r_delta,
            r_xd: 0.0,
            r_xdelta: 0.0,
            r_ddelta: 0.0,
        }
    }

    #[test]
    fn lambda_star_prime_examples() {
        let p = unit_profile();
        assert_abs_diff_eq!(
            lambda_star_prime(&p, &rates_with(0.0, 0.0), 1.0, 0.0),
            2.0,
            epsilon = 1e-15
        );
        let want = 2.0 * (core::f64::consts::SQRT_2 * 0.2 + 0.02 + 2.0);
        assert_abs_diff_eq!(
            lambda_star_prime(&p, &rates_with(0.1, 0.1), 1.0, 0.5),
            want,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(want, 4.6057, epsilon = 1e-4);
        assert_abs_diff_eq!(
            lambda_star_prime(&p, &rates_with(0.0, 0.0), 2.0, 0.0),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn remark_tau_x_reference() {
        let tau = remark_tau_x(10_000, 100, 0.1).unwrap();
        let want = libm::pow((libm::log(100.0) + libm::log(10.0)) / 1e4, -0.25);
        assert_abs_diff_eq!(tau, want, epsilon = 1e-12);
        assert_abs_diff_eq!(tau, 6.17, epsilon = 0.01);
    }

    #[test]
    fn epsilon_defaults() {
        assert_eq!(default_epsilon(250, 0), 1.0 / 250.0);
        assert_eq!(default_epsilon(250, 25), 0.1);
    }

    #[test]
    fn rejects_singular_profile() {
        let mut p = unit_profile();
        p.lambda_sigma = 0.0;
        let size = ProblemSize {
            n: 100,
            d: 10,
            s: 2,
            o: 0,
            delta: 0.1,
            beta_star_l1: None,
        };
        assert_eq!(default_config(&p, &size).unwrap_err(), Error::SingularGram);
    }

    #[test]
    fn tau_suc_ratio_is_exact() {
        let p = MomentProfile::new(1.0, 1.2, 1.4, 1.3, 0.8, 1.5, 0.7).unwrap();
        let size = ProblemSize {
            n: 500,
            d: 20,
            s: 3,
            o: 10,
            delta: 0.1,
            beta_star_l1: Some(3.0),
        };
        let c = default_config(&p, &size).unwrap();
        assert_eq!(c.tau_suc / c.tau_suc_prime, c.constants.c_suc);
        c.validate().unwrap();
        let c = calibrated_config(&p, &size, &Calibration::default()).unwrap();
        c.validate().unwrap();
    }
}
