//! Weighted ℓ1-penalized Huber regression
//! `argmin_β Σ_i λ_o² H(c_i (y_i − x̃_iᵀβ)/(λ_o√n)) + λ_s‖β‖₁`, with
//! `c_i = n·ŵ′_i`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Huber loss: `t²/2` for `|t| ≤ 1`, `|t| − 1/2` otherwise.
#[inline]
pub fn huber_value(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        0.5 * t * t
    } else {
        a - 0.5
    }
}

/// `H′(t)`: `t` for `|t| ≤ 1`, `sgn(t)` otherwise.
#[inline]
pub fn huber_deriv(t: f64) -> f64 {
    if t.abs() <= 1.0 {
        t
    } else {
        1.0f64.copysign(t)
    }
}

#[inline]
pub fn soft_threshold(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

/// Problem data. `sample_scale[i]` is `n·ŵ′_i`, i.e. 0 or 1 after rounding.
#[derive(Debug, Clone, Copy)]
pub struct HuberObjective<'a> {
    pub y: &'a [f64],
    pub x: &'a Matrix,
    pub sample_scale: &'a [f64],
    pub lambda_o: f64,
    pub lambda_s: f64,
}

impl<'a> HuberObjective<'a> {
    pub fn new(y: &'a [f64], x: &'a Matrix, sample_scale: &'a [f64], lambda_o: f64, lambda_s: f64) -> Result<Self> {
        let n = x.rows();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                what: "response length",
                expected: n,
                found: y.len(),
            });
        }
        if sample_scale.len() != n {
            return Err(Error::DimensionMismatch {
                what: "weight vector length",
                expected: n,
                found: sample_scale.len(),
            });
        }
        if !(lambda_o > 0.0 && lambda_o.is_finite()) {
            return Err(Error::param("lambda_o", "must be positive and finite"));
        }
        if !(lambda_s >= 0.0 && lambda_s.is_finite()) {
            return Err(Error::param("lambda_s", "must be nonnegative and finite"));
        }
        if sample_scale.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::param("weights", "must be nonnegative and finite"));
        }
        Ok(Self {
            y,
            x,
            sample_scale,
            lambda_o,
            lambda_s,
        })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    fn arg_scale(&self) -> f64 {
        1.0 / (self.lambda_o * libm::sqrt(self.n() as f64))
    }

    /// Smooth part `Σ λ_o² H(·)`.
    pub fn smooth_value(&self, beta: &[f64]) -> f64 {
        let k = self.arg_scale();
        let l2 = self.lambda_o * self.lambda_o;
        let terms: Vec<f64> = self
            .x
            .row_iter()
            .zip(self.y)
            .zip(self.sample_scale)
            .map(|((row, &yi), &c)| {
                if c == 0.0 {
                    0.0
                } else {
                    l2 * huber_value(c * (yi - linalg::dot(row, beta)) * k)
                }
            })
            .collect();
        linalg::pairwise_sum(&terms)
    }

    /// Smooth value and gradient `−(λ_o/√n) Σ c_i h(a_i) x̃_i`.
    pub fn smooth_value_grad(&self, beta: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.arg_scale();
        let l2 = self.lambda_o * self.lambda_o;
        let g_scale = -self.lambda_o / libm::sqrt(self.n() as f64);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut terms = Vec::with_capacity(self.n());
        for ((row, &yi), &c) in self.x.row_iter().zip(self.y).zip(self.sample_scale) {
            if c == 0.0 {
                terms.push(0.0);
                continue;
            }
            let a = c * (yi - linalg::dot(row, beta)) * k;
            terms.push(l2 * huber_value(a));
            linalg::axpy(g_scale * c * huber_deriv(a), row, grad);
        }
        linalg::pairwise_sum(&terms)
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        self.smooth_value(beta) + self.lambda_s * linalg::norm1(beta)
    }

    /// Upper bound on the curvature of the smooth part:
    /// `λ_max((1/n) Σ c_i² x̃_i x̃_iᵀ)` by power iteration.
    pub fn curvature_estimate(&self) -> f64 {
        let n = self.n() as f64;
        linalg::power_iteration(
            self.d(),
            |v, out| {
                for (row, &c) in self.x.row_iter().zip(self.sample_scale) {
                    if c != 0.0 {
                        let p = c * c * linalg::dot(row, v) / n;
                        linalg::axpy(p, row, out);
                    }
                }
            },
            200,
            1e-6,
        )
    }

    /// `max_j dist(−∇f(β)_j, λ_s ∂|β_j|)`.
    pub fn stationarity(&self, beta: &[f64], grad: &[f64]) -> f64 {
        beta.iter()
            .zip(grad)
            .map(|(&b, &g)| {
                if b != 0.0 {
                    (g + self.lambda_s * b.signum()).abs()
                } else {
                    (g.abs() - self.lambda_s).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberControls {
    pub max_iters: usize,
    pub tolerance: f64,
    /// Keep the objective value of every accepted iterate.
    pub record_trace: bool,
}

impl Default for HuberControls {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tolerance: 1e-8,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HuberDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub stationarity: f64,
    pub lipschitz: f64,
    pub restarts: usize,
    pub trace: Vec<f64>,
}

/// Relative objective increase tolerated on a plain proximal step.
const TIE_SLACK: f64 = 1e-13;
/// Consecutive tie steps without a new best stationarity before giving up.
const STALL_LIMIT: usize = 25;

/// Accelerated proximal gradient with backtracking and function-value
/// restart, started at `β = 0`. The objective is nonincreasing along
/// accepted iterates.
pub fn solve(obj: &HuberObjective<'_>, ctrl: &HuberControls) -> (Vec<f64>, HuberDiagnostics) {
    let d = obj.d();
    let mut beta = alloc::vec![0.0; d];
    let mut grad = alloc::vec![0.0; d];
    let smooth = obj.smooth_value_grad(&beta, &mut grad);
    let mut f_beta = smooth + obj.lambda_s * linalg::norm1(&beta);
    let mut stationarity = obj.stationarity(&beta, &grad);
    let mut lipschitz = obj.curvature_estimate().max(1e-12);
    let mut diag = HuberDiagnostics {
        iterations: 0,
        converged: stationarity <= ctrl.tolerance,
        objective: f_beta,
        stationarity,
        lipschitz,
        restarts: 0,
        trace: Vec::new(),
    };
    if ctrl.record_trace {
        diag.trace.push(f_beta);
    }
    if diag.converged {
        return (beta, diag);
    }

    let mut z = beta.clone();
    let mut z_grad = grad.clone();
    let mut z_smooth = smooth;
    let mut momentum = 1.0f64;
    let mut candidate = alloc::vec![0.0; d];
    let mut cand_grad = alloc::vec![0.0; d];
    let mut best_stationarity = stationarity;
    let mut stalled = 0usize;

    for k in 1..=ctrl.max_iters {
        diag.iterations = k;
        // Backtracking on the quadratic upper model around z.
        let cand_smooth = loop {
            for j in 0..d {
                candidate[j] = soft_threshold(z[j] - z_grad[j] / lipschitz, obj.lambda_s / lipschitz);
            }
            let f = obj.smooth_value(&candidate);
            let mut model = z_smooth;
            let mut dist2 = 0.0;
            for j in 0..d {
                let step = candidate[j] - z[j];
                model += z_grad[j] * step;
                dist2 += step * step;
            }
            model += 0.5 * lipschitz * dist2;
            if f <= model + 1e-12 * model.abs().max(1.0) || lipschitz > 1e300 {
                break f;
            }
            lipschitz *= 2.0;
        };
        let f_cand = cand_smooth + obj.lambda_s * linalg::norm1(&candidate);

        if f_cand > f_beta {
            if z != beta {
                // Restart from the incumbent without momentum.
                diag.restarts += 1;
                momentum = 1.0;
                z.copy_from_slice(&beta);
                z_grad.copy_from_slice(&grad);
                z_smooth = f_beta - obj.lambda_s * linalg::norm1(&beta);
                continue;
            }
            // A plain proximal step that ties within rounding still improves
            // stationarity; anything worse means the precision is exhausted.
            if f_cand > f_beta + TIE_SLACK * f_beta.abs().max(1.0) || stalled >= STALL_LIMIT {
                break;
            }
            stalled += 1;
        }

        let cand_smooth = obj.smooth_value_grad(&candidate, &mut cand_grad);
        let next_momentum = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * momentum * momentum));
        let coef = (momentum - 1.0) / next_momentum;
        for j in 0..d {
            z[j] = candidate[j] + coef * (candidate[j] - beta[j]);
        }
        momentum = next_momentum;
        beta.copy_from_slice(&candidate);
        grad.copy_from_slice(&cand_grad);
        f_beta = cand_smooth + obj.lambda_s * linalg::norm1(&beta);
        if ctrl.record_trace {
            diag.trace.push(f_beta);
        }

        stationarity = obj.stationarity(&beta, &grad);
        if stationarity < best_stationarity {
            best_stationarity = stationarity;
            stalled = 0;
        }
        if stationarity <= ctrl.tolerance {
            diag.converged = true;
            break;
        }
        if coef == 0.0 {
            z_grad.copy_from_slice(&grad);
            z_smooth = cand_smooth;
        } else {
            z_smooth = obj.smooth_value_grad(&z, &mut z_grad);
        }
    }
    diag.objective = f_beta;
    diag.stationarity = stationarity;
    diag.lipschitz = lipschitz;
    (beta, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn loss_examples() {
        assert_eq!(huber_value(0.0), 0.0);
        assert_eq!(huber_value(0.5), 0.125);
        assert_eq!(huber_value(2.0), 1.5);
        assert_eq!(huber_deriv(0.5), 0.5);
        assert_eq!(huber_deriv(2.0), 1.0);
        assert_eq!(huber_deriv(-3.0), -1.0);
    }

    #[test]
    fn objective_examples() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.5, -1.0, 0.0]]).unwrap();
        let zeros = [0.0; 2];
        let obj = HuberObjective::new(&zeros, &x, &[1.0, 1.0], 1.3, 0.7).unwrap();
        assert_eq!(obj.value(&[0.0; 3]), 0.0);

        let y = [4.0, -1.0];
        let obj = HuberObjective::new(&y, &x, &[0.0, 0.0], 1.3, 0.7).unwrap();
        assert_abs_diff_eq!(obj.value(&[1.0, -2.0, 0.5]), 0.7 * 3.5, epsilon = 1e-15);

        let x1 = Matrix::zeros(1, 3);
        let lambda_o = 0.8;
        let y1 = [2.0 * lambda_o];
        let obj = HuberObjective::new(&y1, &x1, &[1.0], lambda_o, 0.3).unwrap();
        assert_abs_diff_eq!(obj.value(&[0.0; 3]), 1.5 * lambda_o * lambda_o, epsilon = 1e-15);
    }

    #[test]
    fn large_penalty_gives_zero() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 1.0, -1.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let y = [1.0, 2.0, -1.0];
        let scale = [1.0; 3];
        let probe = HuberObjective::new(&y, &x, &scale, 1.0, 0.0).unwrap();
        let mut g = [0.0; 3];
        probe.smooth_value_grad(&[0.0; 3], &mut g);
        let obj = HuberObjective::new(&y, &x, &scale, 1.0, linalg::norm_inf(&g)).unwrap();
        let (beta, diag) = solve(&obj, &HuberControls::default());
        assert_eq!(beta, vec![0.0; 3]);
        assert!(diag.converged);
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = Matrix::zeros(2, 3);
        assert!(HuberObjective::new(&[0.0; 2], &x, &[1.0; 2], 0.0, 1.0).is_err());
        assert!(HuberObjective::new(&[0.0; 2], &x, &[1.0; 2], 1.0, -1.0).is_err());
        assert!(HuberObjective::new(&[0.0; 3], &x, &[1.0; 2], 1.0, 1.0).is_err());
    }
}
