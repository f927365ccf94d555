//! Data types of the contaminated regression model and the rate quantities
//! shared by every stage.
//!
//! Observations follow `y_i = X_iᵀβ* + ξ_i + √n·θ_i` with `X_i = x_i + ϱ_i`,
//! where `(ϱ_i, θ_i)` are nonzero only on the outlier set. Indices are 0-based.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricEigen};

/// Ground truth attached to synthetic instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub beta_star: Vec<f64>,
    /// Sorted indices of the nonzero coefficients.
    pub support: Vec<usize>,
    /// Sorted outlier indices.
    pub outlier_set: Vec<usize>,
    /// Sorted inlier indices.
    pub inlier_set: Vec<usize>,
}

impl Truth {
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn outliers(&self) -> usize {
        self.outlier_set.len()
    }

    fn validate(&self, n: usize, d: usize) -> Result<()> {
        if self.beta_star.len() != d {
            return Err(Error::DimensionMismatch {
                what: "beta_star length",
                expected: d,
                found: self.beta_star.len(),
            });
        }
        if self.support.len() > d || self.support.iter().any(|&j| j >= d) {
            return Err(Error::param("support", "indices must lie in 0..d"));
        }
        for (j, &b) in self.beta_star.iter().enumerate() {
            if b != 0.0 && self.support.binary_search(&j).is_err() {
                return Err(Error::param("beta_star", "nonzero entry outside the support"));
            }
        }
        if self.outlier_set.len() + self.inlier_set.len() != n {
            return Err(Error::param("outlier_set", "outliers and inliers must partition 0..n"));
        }
        let mut seen = alloc::vec![false; n];
        for &i in self.outlier_set.iter().chain(&self.inlier_set) {
            if i >= n || seen[i] {
                return Err(Error::param("outlier_set", "outliers and inliers must partition 0..n"));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// Observed `(y, X)` with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInstance {
    y: Vec<f64>,
    x: Matrix,
    truth: Option<Truth>,
}

impl RegressionInstance {
    pub fn new(y: Vec<f64>, x: Matrix, truth: Option<Truth>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "rows of X",
                expected: y.len(),
                found: x.rows(),
            });
        }
        if x.cols() < 3 {
            return Err(Error::param("d", "dimension must be at least 3"));
        }
        if y.is_empty() {
            return Err(Error::param("n", "at least one sample is required"));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "responses" });
        }
        if let Some(t) = &truth {
            t.validate(y.len(), x.cols())?;
        }
        Ok(Self { y, x, truth })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn truth(&self) -> Option<&Truth> {
        self.truth.as_ref()
    }

    /// Reorders samples so that new sample `k` is old sample `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.n();
        if order.len() != n {
            return Err(Error::DimensionMismatch {
                what: "permutation length",
                expected: n,
                found: order.len(),
            });
        }
        let y = order.iter().map(|&i| self.y[i]).collect();
        let x = self.x.select_rows(order);
        let truth = self.truth.as_ref().map(|t| {
            let mut inverse = alloc::vec![0usize; n];
            for (new, &old) in order.iter().enumerate() {
                inverse[old] = new;
            }
            let remap = |set: &[usize]| {
                let mut v: Vec<usize> = set.iter().map(|&i| inverse[i]).collect();
                v.sort_unstable();
                v
            };
            Truth {
                beta_star: t.beta_star.clone(),
                support: t.support.clone(),
                outlier_set: remap(&t.outlier_set),
                inlier_set: remap(&t.inlier_set),
            }
        });
        Self::new(y, x, truth)
    }
}

/// Moment constants of the covariate and noise laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentProfile {
    /// `max_j (E x_j²)^{1/2}`
    pub sigma_x2: f64,
    /// `max_j (E x_j⁴)^{1/4}`
    pub sigma_x4: f64,
    /// Bound on `(E(x_a x_b x_c x_d)²)^{1/8}`.
    pub sigma_x8: f64,
    /// Finite-kurtosis constant: `E(vᵀx)⁴ ≤ K⁴ (E(vᵀx)²)²`.
    pub kurtosis_k: f64,
    /// Absolute-moment bound of the noise.
    pub sigma_noise: f64,
    /// `‖Σ^{1/2}‖_op`
    pub sigma_op: f64,
    /// Minimum singular value of `Σ^{1/2}`.
    pub lambda_sigma: f64,
}

impl MomentProfile {
    pub fn new(
        sigma_x2: f64,
        sigma_x4: f64,
        sigma_x8: f64,
        kurtosis_k: f64,
        sigma_noise: f64,
        sigma_op: f64,
        lambda_sigma: f64,
    ) -> Result<Self> {
        let p = Self {
            sigma_x2,
            sigma_x4,
            sigma_x8,
            kurtosis_k,
            sigma_noise,
            sigma_op,
            lambda_sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.sigma_x2,
            self.sigma_x4,
            self.sigma_x8,
            self.kurtosis_k,
            self.sigma_noise,
            self.sigma_op,
            self.lambda_sigma,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::param(
                "moment profile",
                "all constants must be finite and positive",
            ));
        }
        if self.lambda_sigma > self.sigma_op * (1.0 + 1e-12) {
            return Err(Error::param("lambda_sigma", "must not exceed sigma_op"));
        }
        if self.kurtosis_k < 1.0 - 1e-12 {
            return Err(Error::param("kurtosis_k", "must be at least 1"));
        }
        Ok(())
    }

    /// `‖Σ‖_op = ‖Σ^{1/2}‖²_op`
    pub fn sigma_op_sq(&self) -> f64 {
        self.sigma_op * self.sigma_op
    }

    /// The theory simplifies by assuming `λ_Σ ≤ 1`; reported, not enforced.
    pub fn lambda_sigma_at_most_one(&self) -> bool {
        self.lambda_sigma <= 1.0
    }
}

/// A plug-in moment profile computed from data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedProfile {
    /// Unvalidated: `lambda_sigma` is 0 when the Gram matrix is singular.
    pub profile: MomentProfile,
    pub singular_gram: bool,
}

const RANDOM_DIRECTIONS: usize = 100;

/// Empirical plug-in estimates of the moment constants.
///
/// `sigma_x8` uses the Hölder bound `E(x_a x_b x_c x_d)² ≤ max_j E x_j⁸`; the
/// kurtosis constant is a max over coordinate directions and 100 seeded random
/// unit directions. `sigma_noise` is set to 1 since no residuals exist yet.
pub fn estimate_moment_profile(x: &Matrix, seed: u64) -> Result<EstimatedProfile> {
    let n = x.rows();
    let d = x.cols();
    if n < 2 {
        return Err(Error::param("n", "moment estimation needs at least two samples"));
    }
    if d == 0 {
        return Err(Error::param("d", "moment estimation needs at least one column"));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite { what: "covariates" });
    }
    let nf = n as f64;
    let mut m2 = alloc::vec![0.0; d];
    let mut m4 = alloc::vec![0.0; d];
    let mut m8 = alloc::vec![0.0; d];
    for row in x.row_iter() {
        for j in 0..d {
            let s = row[j] * row[j];
            m2[j] += s;
            m4[j] += s * s;
            m8[j] += s * s * s * s;
        }
    }
    let max_of = |v: &[f64]| v.iter().fold(0.0f64, |m, &a| m.max(a / nf));
    let sigma_x2 = libm::sqrt(max_of(&m2));
    let sigma_x4 = libm::pow(max_of(&m4), 0.25);
    let sigma_x8 = libm::pow(max_of(&m8), 0.125);

    let gram = linalg::weighted_gram(x, &alloc::vec![1.0 / nf; n]);
    let eig = SymmetricEigen::values_only(&gram)?;
    let top = eig.last().copied().unwrap_or(0.0).max(0.0);
    let bottom = eig.first().copied().unwrap_or(0.0);
    let singular = top <= 0.0 || bottom <= 1e-12 * top;
    let sigma_op = libm::sqrt(top);
    let lambda_sigma = if singular { 0.0 } else { libm::sqrt(bottom) };

    let mut ratio_max = 1.0f64;
    let mut directional = |proj: &mut dyn FnMut(&[f64]) -> f64| {
        let (mut s2, mut s4) = (0.0, 0.0);
        for row in x.row_iter() {
            let t = proj(row);
            let t2 = t * t;
            s2 += t2;
            s4 += t2 * t2;
        }
        let (s2, s4) = (s2 / nf, s4 / nf);
        if s2 > 0.0 {
            ratio_max = ratio_max.max(s4 / (s2 * s2));
        }
    };
    for j in 0..d {
        directional(&mut |row: &[f64]| row[j]);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_DIRECTIONS {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let nv = linalg::norm2(&v);
        if nv > 0.0 {
            v.iter_mut().for_each(|a| *a /= nv);
        }
        directional(&mut |row: &[f64]| linalg::dot(row, &v));
    }
    let kurtosis_k = libm::pow(ratio_max, 0.25);

    Ok(EstimatedProfile {
        profile: MomentProfile {
            sigma_x2,
            sigma_x4,
            sigma_x8,
            kurtosis_k,
            sigma_noise: 1.0,
            sigma_op,
            lambda_sigma,
        },
        singular_gram: singular,
    })
}

/// Rate quantities; all logarithms are natural.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub delta: f64,
    /// `√(o/n)`
    pub r_o: f64,
    /// `√(log d / n)`
    pub r_d: f64,
    /// `√(log(1/δ) / n)`
    pub r_delta: f64,
    /// `(σ_{x,2}+1) r_d + τ_x r_d²`
    pub r_xd: f64,
    /// `(σ_{x,2}+1) r_δ + τ_x r_δ²`
    pub r_xdelta: f64,
    /// `r_xd + r_xdelta`
    pub r_ddelta: f64,
}

impl Rates {
    /// `r_d² + r_δ² = log(d/δ)/n`
    pub fn log_term(&self) -> f64 {
        self.r_d * self.r_d + self.r_delta * self.r_delta
    }
}

pub fn compute_rates(n: u64, d: u64, o: u64, delta: f64, tau_x: f64, sigma_x2: f64) -> Result<Rates> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if d < 3 {
        return Err(Error::param("d", "dimension must be at least 3"));
    }
    if o > n {
        return Err(Error::param("o", "cannot exceed n"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    if !(tau_x > 0.0 && tau_x.is_finite()) {
        return Err(Error::param("tau_x", "must be positive and finite"));
    }
    if !(sigma_x2 >= 0.0 && sigma_x2.is_finite()) {
        return Err(Error::param("sigma_x2", "must be nonnegative and finite"));
    }
    let nf = n as f64;
    let r_o = libm::sqrt(o as f64 / nf);
    let r_d = libm::sqrt(libm::log(d as f64) / nf);
    let r_delta = libm::sqrt(libm::log(1.0 / delta) / nf);
    let r_xd = (sigma_x2 + 1.0) * r_d + tau_x * r_d * r_d;
    let r_xdelta = (sigma_x2 + 1.0) * r_delta + tau_x * r_delta * r_delta;
    Ok(Rates {
        delta,
        r_o,
        r_d,
        r_delta,
        r_xd,
        r_xdelta,
        r_ddelta: r_xd + r_xdelta,
    })
}
