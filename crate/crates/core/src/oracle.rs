//! Brute-force reference solvers for tiny problems.
//!
//! Grid optima are attained at feasible points, so they are lower bounds on
//! the true maxima; tests compare against the solvers only up to the grid
//! resolution.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::weights::cap;

/// `⟨S, M⟩ − λ‖M‖₁`, evaluated entrywise.
fn spectrahedron_objective(s: &Matrix, m: &Matrix, lambda_star: f64) -> f64 {
    s.as_slice()
        .iter()
        .zip(m.as_slice())
        .map(|(a, b)| a * b - lambda_star * b.abs())
        .sum()
}

/// Rotation in the plane by `phi`, as columns.
fn rotation2(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = (libm::sin(phi), libm::cos(phi));
    [[c, -s], [s, c]]
}

/// `R_z(a)·R_y(b)·R_z(c)`.
fn rotation3(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
    let (sa, ca) = (libm::sin(a), libm::cos(a));
    let (sb, cb) = (libm::sin(b), libm::cos(b));
    let (sc, cc) = (libm::sin(c), libm::cos(c));
    [
        [ca * cb * cc - sa * sc, -ca * cb * sc - sa * cc, ca * sb],
        [sa * cb * cc + ca * sc, -sa * cb * sc + ca * cc, sa * sb],
        [-sb * cc, sb * sc, cb],
    ]
}

/// `Q diag(μ) Qᵀ` for a small dense `Q`.
fn compose<const D: usize>(q: &[[f64; D]; D], mu: &[f64; D]) -> Matrix {
    Matrix::from_fn(D, D, |i, j| (0..D).map(|k| q[i][k] * mu[k] * q[j][k]).sum())
}

fn check_small(s: &Matrix, trace_budget: f64) -> Result<usize> {
    let d = s.rows();
    if !s.is_square() || !(d == 2 || d == 3) {
        return Err(Error::OracleTooLarge {
            what: "brute_inner_max supports d = 2 or 3 only",
        });
    }
    if !s.is_symmetric(1e-12) {
        return Err(Error::NotSymmetric {
            asymmetry: s.asymmetry(),
        });
    }
    if !(trace_budget > 0.0 && trace_budget.is_finite()) {
        return Err(Error::param("r_bound", "trace budget must be positive and finite"));
    }
    Ok(d)
}

/// Eigenvalue lattice `{t·(i_1..i_D)/levels : Σ i ≤ levels}`.
fn lattice<const D: usize>(levels: usize, t: f64, mut visit: impl FnMut(&[f64; D])) {
    let mut idx = [0usize; D];
    loop {
        let used: usize = idx.iter().sum();
        if used <= levels {
            let mut mu = [0.0; D];
            for k in 0..D {
                mu[k] = t * idx[k] as f64 / levels as f64;
            }
            visit(&mu);
        }
        // Odometer over the box; the sum check above keeps lattice points.
        let mut k = 0;
        loop {
            if k == D {
                return;
            }
            idx[k] += 1;
            if idx[k] <= levels {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Grid maximum of `⟨S, M⟩ − λ‖M‖₁` over `M = Q diag(μ) Qᵀ`, `μ ≥ 0`,
/// `Σμ ≤ t`, with `grid` steps per angle and per eigenvalue.
///
/// The grid for `k·grid` contains the grid for `grid`, so values are
/// nondecreasing along such refinements.
pub fn brute_inner_max(s: &Matrix, lambda_star: f64, trace_budget: f64, grid: usize) -> Result<f64> {
    let d = check_small(s, trace_budget)?;
    if grid == 0 {
        return Err(Error::param("grid", "must be positive"));
    }
    let pi = core::f64::consts::PI;
    let mut best = 0.0f64;
    if d == 2 {
        for a in 0..grid {
            let q = rotation2(pi * a as f64 / grid as f64);
            lattice::<2>(grid, trace_budget, |mu| {
                best = best.max(spectrahedron_objective(s, &compose(&q, mu), lambda_star));
            });
        }
    } else {
        for a in 0..2 * grid {
            for b in 0..=grid {
                for c in 0..2 * grid {
                    let q = rotation3(
                        pi * a as f64 / grid as f64,
                        pi * b as f64 / grid as f64,
                        pi * c as f64 / grid as f64,
                    );
                    lattice::<3>(grid, trace_budget, |mu| {
                        best = best.max(spectrahedron_objective(s, &compose(&q, mu), lambda_star));
                    });
                }
            }
        }
    }
    Ok(best)
}

/// Result of a refined brute-force search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteValue {
    /// Attained at a feasible point: a lower bound on the maximum.
    pub value: f64,
    /// Width of the certified interval above `value`.
    pub resolution: f64,
}

/// Parameters `(angles, unnormalized eigenvalues)`; `μ_k = t·|v_k|/Σ|v|` puts
/// every point on the face `Tr M = t`. The objective is positively
/// homogeneous, so the maximum over the spectrahedron is the larger of 0 and
/// the maximum over that face.
fn point_from_params(d: usize, p: &[f64], t: f64) -> Matrix {
    let raw: Vec<f64> = p[d * (d - 1) / 2..].iter().map(|v| v.abs()).collect();
    let total: f64 = raw.iter().sum();
    let scale = if total > 0.0 { t / total } else { 0.0 };
    if d == 2 {
        let mu = [raw[0] * scale, raw[1] * scale];
        compose(&rotation2(p[0]), &mu)
    } else {
        let mu = [raw[0] * scale, raw[1] * scale, raw[2] * scale];
        compose(&rotation3(p[0], p[1], p[2]), &mu)
    }
}

/// Grid points refined by the local search.
const SEEDS: usize = 16;

/// Coarse grid followed by a compass search on the angles and eigenvalues of
/// the best grid points, combined with a smoothed dual solve. The value is
/// the best feasible point found; `resolution` is the distance to the
/// certified upper bound.
pub fn brute_inner_max_refined(s: &Matrix, lambda_star: f64, trace_budget: f64, grid: usize) -> Result<BruteValue> {
    let d = check_small(s, trace_budget)?;
    if grid == 0 {
        return Err(Error::param("grid", "must be positive"));
    }
    let pi = core::f64::consts::PI;
    let t = trace_budget;
    let n_angles = d * (d - 1) / 2;
    let eval = |p: &[f64]| spectrahedron_objective(s, &point_from_params(d, p, t), lambda_star);

    // Seed points: best few of the coarse grid.
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut push = |v: f64, p: Vec<f64>| {
        if p[n_angles..].iter().all(|&m| m == 0.0) {
            return;
        }
        seeds.push((v, p));
        if seeds.len() > 4 * SEEDS {
            seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
            seeds.truncate(SEEDS);
        }
    };
    if d == 2 {
        for a in 0..grid {
            let phi = pi * a as f64 / grid as f64;
            lattice::<2>(grid, t, |mu| {
                let p = alloc::vec![phi, mu[0], mu[1]];
                push(eval(&p), p);
            });
        }
    } else {
        for a in 0..2 * grid {
            for b in 0..=grid {
                for c in 0..2 * grid {
                    let ang = [a, b, c].map(|k| pi * k as f64 / grid as f64);
                    lattice::<3>(grid, t, |mu| {
                        let p = alloc::vec![ang[0], ang[1], ang[2], mu[0], mu[1], mu[2]];
                        push(eval(&p), p);
                    });
                }
            }
        }
    }
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
    seeds.truncate(SEEDS);

    let mut best = f64::NEG_INFINITY;
    let min_step = 1e-9;
    for (v0, mut p) in seeds {
        let mut value = v0;
        let mut angle_step = pi / grid as f64;
        let mut mu_step = t / grid as f64;
        while angle_step > min_step || mu_step > min_step * t {
            // Coordinate and pairwise-diagonal moves; the diagonals let the
            // search follow ridges of the ℓ1 term.
            let mut improved = false;
            let step_of = |k: usize| if k < n_angles { angle_step } else { mu_step };
            for k in 0..p.len() {
                for l in k..p.len() {
                    let moves: &[(f64, f64)] = if l == k {
                        &[(1.0, 0.0), (-1.0, 0.0)]
                    } else {
                        &[(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
                    };
                    for &(dk, dl) in moves {
                        let mut q = p.clone();
                        q[k] += dk * step_of(k);
                        q[l] += dl * step_of(l);
                        let v = eval(&q);
                        if v > value {
                            value = v;
                            p = q;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                angle_step *= 0.5;
                mu_step *= 0.5;
            }
        }
        best = best.max(value);
    }
    let (lower, upper) = smoothed_dual(s, lambda_star, t);
    let value = best.max(lower).max(0.0);
    Ok(BruteValue {
        value,
        resolution: (upper - value).max(0.0),
    })
}

/// Certified bounds from the dual `min_{|U_ij| ≤ λ} t·max(λ_max(S − U), 0)`.
///
/// `λ_max` is smoothed by `ε·log Σ exp(λ_k/ε)` and minimized over the box by
/// accelerated projected gradient with decreasing `ε`. The exact `λ_max` at
/// each feasible `U` bounds the maximum above; the softmax-weighted
/// eigenprojector scaled to trace `t` is feasible and bounds it below.
fn smoothed_dual(s: &Matrix, lambda_star: f64, t: f64) -> (f64, f64) {
    let d = s.rows();
    let scale = s.frobenius_norm().max(lambda_star).max(f64::MIN_POSITIVE);
    let target = 1e-5 * t * scale;
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    let mut u = Matrix::zeros(d, d);
    for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7].map(|e| e * scale) {
        let mut y = u.clone();
        let mut theta = 1.0f64;
        for _ in 0..3000 {
            let Ok(eig) = linalg::SymmetricEigen::new(&s.sub(&y)) else {
                return (lower, upper);
            };
            let Some(vectors) = eig.vectors else {
                return (lower, upper);
            };
            let top = eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = eig.values.iter().map(|v| libm::exp((v - top) / eps)).collect();
            let total: f64 = weights.iter().sum();
            let mut p = Matrix::zeros(d, d);
            for (k, w) in weights.iter().enumerate() {
                let v = vectors.row(k);
                for i in 0..d {
                    for j in 0..d {
                        p[(i, j)] += w / total * v[i] * v[j];
                    }
                }
            }
            lower = lower.max(spectrahedron_objective(s, &p.scale(t), lambda_star));
            // Gradient of the smoothed λ_max in U is −P; step 1/L = ε.
            let mut next = y.add(&p.scale(eps));
            for v in next.as_mut_slice() {
                *v = v.clamp(-lambda_star, lambda_star);
            }
            let Ok(values) = linalg::SymmetricEigen::values_only(&s.sub(&next)) else {
                return (lower, upper);
            };
            let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            upper = upper.min(t * top.max(0.0));
            if upper - lower <= target {
                return (lower, upper);
            }
            let theta_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * theta * theta));
            y = next.add(&next.sub(&u).scale((theta - 1.0) / theta_next));
            u = next;
            theta = theta_next;
        }
    }
    (lower, upper)
}

/// Grid minimum over the truncated simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOracle {
    pub value: f64,
    pub w: Vec<f64>,
}

/// `min_w max_M Σ w_i⟨x_i x_iᵀ, M⟩ − λ‖M‖₁` by a grid over weights with
/// step `1/w_grid` (respecting the cap) composed with [`brute_inner_max`] at
/// `inner_grid`. Limited to `n ≤ 4`, `d = 2`.
pub fn brute_simplex_min(
    x: &Matrix,
    lambda_star: f64,
    trace_budget: f64,
    epsilon: f64,
    w_grid: usize,
    inner_grid: usize,
) -> Result<SimplexOracle> {
    let n = x.rows();
    if n == 0 || n > 4 || x.cols() != 2 {
        return Err(Error::OracleTooLarge {
            what: "brute_simplex_min supports n <= 4, d = 2",
        });
    }
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::param("epsilon", "must lie in [0, 1/2)"));
    }
    if w_grid == 0 || w_grid > 200 {
        return Err(Error::OracleTooLarge {
            what: "weight grid must have 1..=200 steps",
        });
    }
    let cap = cap(n, epsilon) + 1e-12;
    let mut best: Option<SimplexOracle> = None;
    let mut idx = alloc::vec![0usize; n - 1];
    loop {
        let used: usize = idx.iter().sum();
        if used <= w_grid {
            let mut w: Vec<f64> = idx.iter().map(|&k| k as f64 / w_grid as f64).collect();
            w.push((w_grid - used) as f64 / w_grid as f64);
            if w.iter().all(|&v| v <= cap) {
                let gram = linalg::weighted_gram(x, &w);
                let v = brute_inner_max(&gram, lambda_star, trace_budget, inner_grid)?;
                if best.as_ref().is_none_or(|b| v < b.value) {
                    best = Some(SimplexOracle { value: v, w });
                }
            }
        }
        let mut k = 0;
        loop {
            if k == n - 1 {
                return best.ok_or(Error::InfeasibleWeights {
                    reason: "no grid point satisfies the cap; refine the weight grid",
                });
            }
            idx[k] += 1;
            if idx[k] <= w_grid {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Central differences `(f(x + h e_j) − f(x − h e_j))/(2h)`.
pub fn finite_diff(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "step must be positive");
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            probe[j] = x[j] + h;
            let up = f(&probe);
            probe[j] = x[j] - h;
            let down = f(&probe);
            probe[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}
