//! Synthetic instances: heavy-tailed covariates, optional Toeplitz
//! correlation, and strong-contamination adversaries.
//!
//! Sample `i` draws its covariates and noise from ChaCha12 stream `i` of the
//! spec seed, so instances do not depend on generation order.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricEigen};
use crate::model::{MomentProfile, RegressionInstance, Truth};

const STREAM_SUPPORT: u64 = u64::MAX;
const STREAM_ADVERSARY: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariateLaw {
    Gaussian,
    /// Student-t with `df > 8` degrees of freedom.
    StudentT {
        df: f64,
    },
    /// `±P` with `P` Pareto(scale 1, `tail`); `tail > 2` for a variance,
    /// `tail > 8` for the moment profile.
    SymmetricPareto {
        tail: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLaw {
    Gaussian {
        scale: f64,
    },
    /// Unstandardized `scale·t_df`, `df ≥ 2` (infinite variance at 2).
    StudentT {
        df: f64,
        scale: f64,
    },
    Laplace {
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contamination {
    None,
    /// Random samples get `ϱ_i = ±magnitude/√d` per coordinate and a response
    /// shift of `±magnitude`.
    Oblivious {
        o: usize,
        magnitude: f64,
    },
    /// Random samples are replaced by `X_i = magnitude·u` with `u` the unit
    /// clean-data OLS direction, and `y_i = −X_iᵀβ̂_OLS`.
    Leverage {
        o: usize,
        magnitude: f64,
    },
    /// The `o` samples with the largest `|x_iᵀβ*|` get
    /// `y_i = −x_iᵀβ* + ξ_j` for a resampled inlier noise draw `ξ_j`.
    AdaptiveResponse {
        o: usize,
    },
}

impl Contamination {
    pub fn outliers(&self) -> usize {
        match *self {
            Contamination::None => 0,
            Contamination::Oblivious { o, .. }
            | Contamination::Leverage { o, .. }
            | Contamination::AdaptiveResponse { o } => o,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Contamination::None => "none",
            Contamination::Oblivious { .. } => "oblivious",
            Contamination::Leverage { .. } => "leverage",
            Contamination::AdaptiveResponse { .. } => "adaptive_response",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub covariate_law: CovariateLaw,
    /// Toeplitz parameter `ρ ∈ [0, 1)`, `Σ_jk = ρ^{|j−k|}`.
    pub correlation: Option<f64>,
    pub noise_law: NoiseLaw,
    pub beta_scale: f64,
    pub contamination: Contamination,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if self.d < 3 {
            return Err(Error::param("d", "dimension must be at least 3"));
        }
        if self.s > self.d {
            return Err(Error::param("s", "cannot exceed d"));
        }
        match self.covariate_law {
            CovariateLaw::Gaussian => {}
            CovariateLaw::StudentT { df } => {
                if !(df > 8.0 && df.is_finite()) {
                    return Err(Error::param("covariate_law.df", "student_t covariates need df > 8"));
                }
            }
            CovariateLaw::SymmetricPareto { tail } => {
                if !(tail > 2.0 && tail.is_finite()) {
                    return Err(Error::param("covariate_law.tail", "symmetric_pareto needs tail > 2"));
                }
            }
        }
        if let Some(rho) = self.correlation {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::param("correlation", "must lie in [0, 1)"));
            }
        }
        let (scale, df_ok) = match self.noise_law {
            NoiseLaw::Gaussian { scale } | NoiseLaw::Laplace { scale } => (scale, true),
            NoiseLaw::StudentT { df, scale } => (scale, df >= 2.0 && df.is_finite()),
        };
        if !df_ok {
            return Err(Error::param("noise_law.df", "student_t noise needs df >= 2"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("noise_law.scale", "must be positive and finite"));
        }
        if !(self.beta_scale >= 0.0 && self.beta_scale.is_finite()) {
            return Err(Error::param("beta_scale", "must be nonnegative and finite"));
        }
        if self.contamination.outliers() > self.n {
            return Err(Error::param("o", "cannot exceed n"));
        }
        if let Contamination::Oblivious { magnitude, .. } | Contamination::Leverage { magnitude, .. } =
            self.contamination
        {
            if !magnitude.is_finite() {
                return Err(Error::param("magnitude", "must be finite"));
            }
        }
        Ok(())
    }

    fn rho(&self) -> f64 {
        self.correlation.unwrap_or(0.0)
    }
}

/// A generated instance together with its pre-contamination draw.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub instance: RegressionInstance,
    /// `y_i = x_iᵀβ* + ξ_i` on the clean covariates, same outlier labels.
    pub clean: RegressionInstance,
    pub noise: Vec<f64>,
    /// `θ_i = (y_i − X_iᵀβ* − ξ_i)/√n`; zero on inliers.
    pub theta: Vec<f64>,
}

fn stream(seed: u64, id: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn draw_standardized<R: Rng + ?Sized>(law: CovariateLaw, rng: &mut R) -> f64 {
    match law {
        CovariateLaw::Gaussian => rng.sample(StandardNormal),
        CovariateLaw::StudentT { df } => {
            let t: f64 = StudentT::new(df).expect("validated df").sample(rng);
            t * libm::sqrt((df - 2.0) / df)
        }
        CovariateLaw::SymmetricPareto { tail } => {
            // 1 − U lies in (0, 1], so the power is finite.
            let u: f64 = 1.0 - rng.random::<f64>();
            let p = libm::pow(u, -1.0 / tail);
            let sd = libm::sqrt(tail / (tail - 2.0));
            if rng.random::<bool>() {
                p / sd
            } else {
                -p / sd
            }
        }
    }
}

fn draw_noise<R: Rng + ?Sized>(law: NoiseLaw, rng: &mut R) -> f64 {
    match law {
        NoiseLaw::Gaussian { scale } => scale * rng.sample::<f64, _>(StandardNormal),
        NoiseLaw::StudentT { df, scale } => scale * StudentT::new(df).expect("validated df").sample(rng),
        NoiseLaw::Laplace { scale } => {
            let e: f64 = rng.sample(Exp1);
            if rng.random::<bool>() {
                scale * e
            } else {
                -scale * e
            }
        }
    }
}

/// Covariate row `i` (AR(1) mixing of independent standardized draws) and
/// its noise.
fn draw_sample(spec: &GeneratorSpec, i: usize, row: &mut [f64]) -> f64 {
    let mut rng = stream(spec.seed, i as u64);
    let rho = spec.rho();
    let innovation = libm::sqrt(1.0 - rho * rho);
    let mut prev = 0.0;
    for (j, x) in row.iter_mut().enumerate() {
        let z = draw_standardized(spec.covariate_law, &mut rng);
        *x = if j == 0 { z } else { rho * prev + innovation * z };
        prev = *x;
    }
    draw_noise(spec.noise_law, &mut rng)
}

fn draw_beta(spec: &GeneratorSpec) -> (Vec<f64>, Vec<usize>) {
    let mut rng = stream(spec.seed, STREAM_SUPPORT);
    let mut support = index::sample(&mut rng, spec.d, spec.s).into_vec();
    support.sort_unstable();
    let mut beta = alloc::vec![0.0; spec.d];
    for &j in &support {
        beta[j] = if rng.random::<bool>() {
            spec.beta_scale
        } else {
            -spec.beta_scale
        };
    }
    (beta, support)
}

fn sorted_sample<R: Rng + ?Sized>(rng: &mut R, n: usize, o: usize) -> Vec<usize> {
    let mut v = index::sample(rng, n, o).into_vec();
    v.sort_unstable();
    v
}

/// Least squares on the clean data, with a small ridge if the Gram matrix
/// is singular.
fn ols_direction(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let gram = linalg::weighted_gram(x, &alloc::vec![1.0; x.rows()]);
    let rhs = x.tr_mat_vec(y);
    let beta = linalg::cholesky_solve(&gram, &rhs).or_else(|_| {
        let d = gram.cols();
        let ridge = (1e-6 * gram.trace() / d as f64).max(1e-12);
        let mut g = gram.clone();
        for j in 0..d {
            g[(j, j)] += ridge;
        }
        linalg::cholesky_solve(&g, &rhs)
    });
    beta.unwrap_or_else(|_| alloc::vec![0.0; x.cols()])
}

pub fn generate(spec: &GeneratorSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    let (beta_star, support) = draw_beta(spec);
    let mut x = Matrix::zeros(n, d);
    let mut noise = alloc::vec![0.0; n];
    for (i, e) in noise.iter_mut().enumerate() {
        *e = draw_sample(spec, i, x.row_mut(i));
    }
    let y_clean: Vec<f64> = (0..n).map(|i| linalg::dot(x.row(i), &beta_star) + noise[i]).collect();

    let mut adv = stream(spec.seed, STREAM_ADVERSARY);
    let mut x_obs = x.clone();
    let mut y_obs = y_clean.clone();
    let outliers: Vec<usize> = match spec.contamination {
        Contamination::None => Vec::new(),
        Contamination::Oblivious { o, magnitude } => {
            let set = sorted_sample(&mut adv, n, o);
            let per_coord = magnitude / libm::sqrt(d as f64);
            for &i in &set {
                for v in x_obs.row_mut(i) {
                    *v += if adv.random::<bool>() { per_coord } else { -per_coord };
                }
                let shift = if adv.random::<bool>() { magnitude } else { -magnitude };
                y_obs[i] = linalg::dot(x_obs.row(i), &beta_star) + noise[i] + shift;
            }
            set
        }
        Contamination::Leverage { o, magnitude } => {
            let set = sorted_sample(&mut adv, n, o);
            let beta_ols = ols_direction(&x, &y_clean);
            let norm = linalg::norm2(&beta_ols);
            let mut u = alloc::vec![0.0; d];
            if norm > 0.0 {
                u.iter_mut().zip(&beta_ols).for_each(|(a, b)| *a = b / norm);
            } else {
                u[0] = 1.0;
            }
            for &i in &set {
                let row = x_obs.row_mut(i);
                row.iter_mut().zip(&u).for_each(|(a, b)| *a = magnitude * b);
                y_obs[i] = -linalg::dot(x_obs.row(i), &beta_ols);
            }
            set
        }
        Contamination::AdaptiveResponse { o } => {
            let mut order: Vec<usize> = (0..n).collect();
            let score: Vec<f64> = (0..n).map(|i| linalg::dot(x.row(i), &beta_star).abs()).collect();
            // Stable sort: ties keep the lower index first.
            order.sort_by(|&a, &b| score[b].total_cmp(&score[a]));
            let mut set: Vec<usize> = order[..o].to_vec();
            set.sort_unstable();
            let inliers: Vec<usize> = (0..n).filter(|i| set.binary_search(i).is_err()).collect();
            for &i in &set {
                let residual = if inliers.is_empty() {
                    0.0
                } else {
                    noise[inliers[adv.random_range(0..inliers.len())]]
                };
                y_obs[i] = -linalg::dot(x.row(i), &beta_star) + residual;
            }
            set
        }
    };

    let scale = 1.0 / libm::sqrt(n as f64);
    let mut theta = alloc::vec![0.0; n];
    for &i in &outliers {
        theta[i] = (y_obs[i] - linalg::dot(x_obs.row(i), &beta_star) - noise[i]) * scale;
    }
    let inliers: Vec<usize> = (0..n).filter(|i| outliers.binary_search(i).is_err()).collect();
    let truth = Truth {
        beta_star,
        support,
        outlier_set: outliers,
        inlier_set: inliers,
    };
    let clean = RegressionInstance::new(y_clean, x, Some(truth.clone()))?;
    let instance = RegressionInstance::new(y_obs, x_obs, Some(truth))?;
    Ok(GeneratedInstance {
        instance,
        clean,
        noise,
        theta,
    })
}

/// `[E z⁰, E z², E z⁴, E z⁶, E z⁸]` of the standardized covariate law.
pub fn standardized_even_moments(law: CovariateLaw) -> Result<[f64; 5]> {
    let mut m = [1.0; 5];
    match law {
        CovariateLaw::Gaussian => {
            // (2k − 1)!!
            m = [1.0, 1.0, 3.0, 15.0, 105.0];
        }
        CovariateLaw::StudentT { df } => {
            if df.is_nan() || df <= 8.0 {
                return Err(Error::MissingMoments {
                    what: "eighth moments (student_t needs df > 8)",
                });
            }
            // E t^{2k} = df^k Π_{i≤k} (2i−1)/(df−2i), rescaled to unit variance.
            let unit = (df - 2.0) / df;
            let mut raw = 1.0;
            for (k, mk) in m.iter_mut().enumerate().skip(1) {
                let kf = k as f64;
                raw *= df * (2.0 * kf - 1.0) / (df - 2.0 * kf);
                *mk = raw * libm::pow(unit, kf);
            }
        }
        CovariateLaw::SymmetricPareto { tail } => {
            if tail.is_nan() || tail <= 8.0 {
                return Err(Error::MissingMoments {
                    what: "eighth moments (symmetric_pareto needs tail > 8)",
                });
            }
            let var = tail / (tail - 2.0);
            for (k, mk) in m.iter_mut().enumerate().skip(1) {
                let kf = k as f64;
                *mk = tail / (tail - 2.0 * kf) / libm::pow(var, kf);
            }
        }
    }
    Ok(m)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// Even moments of `Σ_k a_k z_k` for independent symmetric `z_k` with even
/// moments `m`.
fn mixture_moments(coefficients: &[f64], m: &[f64; 5]) -> [f64; 5] {
    let mut acc = [1.0, 0.0, 0.0, 0.0, 0.0];
    for &a in coefficients {
        let a2 = a * a;
        let mut y = [1.0; 5];
        for k in 1..5 {
            y[k] = libm::pow(a2, k as f64) * m[k];
        }
        let mut next = [0.0; 5];
        for k in 0..5 {
            for i in 0..=k {
                next[k] += binomial(2 * k, 2 * i) * acc[i] * y[k - i];
            }
        }
        acc = next;
    }
    acc
}

/// `E|ξ|` of the noise law.
pub fn noise_abs_moment(law: NoiseLaw) -> f64 {
    match law {
        NoiseLaw::Gaussian { scale } => scale * libm::sqrt(2.0 / core::f64::consts::PI),
        NoiseLaw::StudentT { df, scale } => {
            let log_ratio = libm::lgamma((df + 1.0) / 2.0) - libm::lgamma(df / 2.0);
            scale * 2.0 * libm::sqrt(df) * libm::exp(log_ratio) / (libm::sqrt(core::f64::consts::PI) * (df - 1.0))
        }
        NoiseLaw::Laplace { scale } => scale,
    }
}

/// `Σ_jk = ρ^{|j−k|}`.
pub fn toeplitz(d: usize, rho: f64) -> Matrix {
    Matrix::from_fn(d, d, |j, k| libm::pow(rho, j.abs_diff(k) as f64))
}

/// Population moment constants of the generator's clean law.
///
/// `σ_{x,8}` uses the Hölder bound `E(x_a x_b x_c x_d)² ≤ max_j E x_j⁸`, and
/// `K⁴ = max(E z⁴, 3)` is the exact kurtosis supremum for a linear mixing of
/// independent coordinates.
pub fn true_moment_profile(spec: &GeneratorSpec) -> Result<MomentProfile> {
    spec.validate()?;
    let m = standardized_even_moments(spec.covariate_law)?;
    let rho = spec.rho();
    let innovation = libm::sqrt(1.0 - rho * rho);
    let (mut max4, mut max8) = (0.0f64, 0.0f64);
    let mut coefficients = Vec::with_capacity(spec.d);
    for j in 0..spec.d {
        coefficients.clear();
        coefficients.push(libm::pow(rho, j as f64));
        coefficients.extend((1..=j).map(|k| libm::pow(rho, (j - k) as f64) * innovation));
        let mm = mixture_moments(&coefficients, &m);
        max4 = max4.max(mm[2]);
        max8 = max8.max(mm[4]);
    }
    let eig = SymmetricEigen::values_only(&toeplitz(spec.d, rho))?;
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    MomentProfile::new(
        1.0,
        libm::pow(max4, 0.25),
        libm::pow(max8, 0.125),
        libm::pow(m[2].max(3.0), 0.25),
        noise_abs_moment(spec.noise_law),
        libm::sqrt(hi),
        libm::sqrt(lo.max(0.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec() -> GeneratorSpec {
        GeneratorSpec {
            n: 60,
            d: 8,
            s: 3,
            covariate_law: CovariateLaw::Gaussian,
            correlation: None,
            noise_law: NoiseLaw::Gaussian { scale: 1.0 },
            beta_scale: 1.0,
            contamination: Contamination::None,
            seed: 11,
        }
    }

    #[test]
    fn clean_generation_has_no_outliers() {
        let g = generate(&spec()).unwrap();
        let t = g.instance.truth().unwrap();
        assert!(t.outlier_set.is_empty());
        assert_eq!(t.support.len(), 3);
        assert_eq!(g.instance, g.clean);
        assert!(g.theta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let mut s = spec();
        s.contamination = Contamination::Leverage { o: 5, magnitude: 100.0 };
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        s.seed += 1;
        assert_ne!(generate(&s).unwrap().instance, generate(&spec()).unwrap().instance);
    }

    #[test]
    fn gaussian_profile() {
        let p = true_moment_profile(&spec()).unwrap();
        assert_eq!(p.sigma_x2, 1.0);
        assert_abs_diff_eq!(p.sigma_x4, libm::pow(3.0, 0.25), epsilon = 1e-14);
        assert_abs_diff_eq!(p.kurtosis_k, libm::pow(3.0, 0.25), epsilon = 1e-14);
        assert_abs_diff_eq!(libm::pow(p.sigma_x8, 8.0), 105.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.sigma_op, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.lambda_sigma, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn student_t_fourth_moment() {
        let m = standardized_even_moments(CovariateLaw::StudentT { df: 9.0 }).unwrap();
        assert_abs_diff_eq!(m[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[2], 4.2, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_mixture_stays_gaussian() {
        let m = standardized_even_moments(CovariateLaw::Gaussian).unwrap();
        let c = [0.6, 0.8];
        let mm = mixture_moments(&c, &m);
        for (a, b) in mm.iter().zip(m.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn noise_moments() {
        assert_abs_diff_eq!(
            noise_abs_moment(NoiseLaw::StudentT { df: 2.0, scale: 1.0 }),
            core::f64::consts::SQRT_2,
            epsilon = 1e-12
        );
        assert_eq!(noise_abs_moment(NoiseLaw::Laplace { scale: 0.7 }), 0.7);
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = spec();
        s.covariate_law = CovariateLaw::StudentT { df: 8.0 };
        assert!(generate(&s).is_err());
        let mut s = spec();
        s.contamination = Contamination::Oblivious { o: 61, magnitude: 1.0 };
        assert!(generate(&s).is_err());
        let mut s = spec();
        s.covariate_law = CovariateLaw::SymmetricPareto { tail: 6.0 };
        assert!(generate(&s).is_ok());
        assert!(matches!(true_moment_profile(&s), Err(Error::MissingMoments { .. })));
    }
}
