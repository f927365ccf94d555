//! Elementwise clipping of covariates to the box `[-τ_x, τ_x]`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Covariates after clipping, together with the threshold used.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedMatrix {
    x_tilde: Matrix,
    tau_x: f64,
}

impl PrunedMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.x_tilde
    }

    pub fn tau_x(&self) -> f64 {
        self.tau_x
    }

    pub fn into_matrix(self) -> Matrix {
        self.x_tilde
    }

    /// Wraps a matrix whose entries are already in the box, e.g. when pruning
    /// is disabled for a baseline. `tau_x` is recorded as the max-abs entry.
    pub fn unpruned(x: Matrix) -> Self {
        let tau_x = x.max_abs();
        Self { x_tilde: x, tau_x }
    }
}

/// `sgn(x)·min(|x|, τ)`; values with `|x| ≤ τ` are returned unchanged.
#[inline]
pub fn clip_value(x: f64, tau: f64) -> f64 {
    if x.abs() <= tau {
        x
    } else {
        tau.copysign(x)
    }
}

pub fn prune_matrix(x: &Matrix, tau_x: f64) -> Result<PrunedMatrix> {
    if tau_x.is_nan() || tau_x <= 0.0 {
        return Err(Error::param("tau_x", "must be positive"));
    }
    let mut out = x.clone();
    let cols = x.cols();
    for (k, v) in out.as_mut_slice().iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteEntry {
                row: k / cols,
                col: k % cols,
            });
        }
        *v = clip_value(*v, tau_x);
    }
    Ok(PrunedMatrix { x_tilde: out, tau_x })
}
