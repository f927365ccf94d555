#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::StandardNormal;
use robreg_core::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Symmetric matrix with standard normal entries on and above the diagonal.
pub fn random_symmetric(rng: &mut impl Rng, d: usize) -> Matrix {
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

/// Symmetric matrix with entries uniform in `[−bound, bound]`.
pub fn random_feasible_dual(rng: &mut impl Rng, d: usize, bound: f64) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = bound * (2.0 * rng.random::<f64>() - 1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Random point of the truncated simplex with cap `1/(n(1−ε))`.
pub fn random_simplex_point(rng: &mut impl Rng, n: usize, epsilon: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
    robreg_core::weights::project_truncated_simplex(&raw, epsilon)
        .unwrap()
        .into_weights()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
