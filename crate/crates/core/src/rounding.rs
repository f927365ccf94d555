//! Discretization of weights to `{0, 1/n}` (also called truncation).

use alloc::vec::Vec;

use crate::weights::TruncatedSimplexPoint;

/// Rounded weights `ŵ′_i ∈ {0, 1/n}`. They are not renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedWeights {
    w_prime: Vec<f64>,
    zeroed_count: usize,
}

impl RoundedWeights {
    /// All samples retained.
    pub fn uniform(n: usize) -> Self {
        Self {
            w_prime: alloc::vec![1.0 / n as f64; n],
            zeroed_count: 0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.w_prime
    }

    pub fn zeroed_count(&self) -> usize {
        self.zeroed_count
    }

    pub fn len(&self) -> usize {
        self.w_prime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_prime.is_empty()
    }

    /// `n·ŵ′_i ∈ {0, 1}`.
    pub fn retained(&self, i: usize) -> bool {
        self.w_prime[i] != 0.0
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            w_prime: order.iter().map(|&i| self.w_prime[i]).collect(),
            zeroed_count: self.zeroed_count,
        }
    }
}

/// `ŵ′_i = 1/n` if `ŵ_i ≥ 1/(2n)`, else 0. Zeroes at most `2εn` entries.
pub fn round_weights(w: &TruncatedSimplexPoint) -> RoundedWeights {
    let n = w.len();
    round_with_threshold(w, 1.0 / (2.0 * n as f64))
}

/// Rounding at an arbitrary threshold; only for fault-injection checks.
#[doc(hidden)]
pub fn round_with_threshold(w: &TruncatedSimplexPoint, threshold: f64) -> RoundedWeights {
    let keep = 1.0 / w.len() as f64;
    let w_prime: Vec<f64> = w
        .weights()
        .iter()
        .map(|&wi| if wi >= threshold { keep } else { 0.0 })
        .collect();
    let zeroed_count = w_prime.iter().filter(|v| **v == 0.0).count();
    RoundedWeights { w_prime, zeroed_count }
}
