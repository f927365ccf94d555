use alloc::vec::Vec;

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;
const CAP_TOL: f64 = 1e-12;

/// A point of the truncated simplex
/// `{w : Σ w_i = 1, 0 ≤ w_i ≤ 1/(n(1−ε))}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSimplexPoint {
    w: Vec<f64>,
    epsilon: f64,
}

impl TruncatedSimplexPoint {
    /// Validates `w` against the simplex constraints for truncation `epsilon`.
    pub fn new(w: Vec<f64>, epsilon: f64) -> Result<Self> {
        validate_epsilon(epsilon)?;
        if w.is_empty() {
            return Err(Error::InfeasibleWeights {
                reason: "empty weight vector",
            });
        }
        let cap = cap(w.len(), epsilon);
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InfeasibleWeights {
                reason: "negative or non-finite entry",
            });
        }
        if w.iter().any(|&v| v > cap + CAP_TOL) {
            return Err(Error::InfeasibleWeights {
                reason: "entry exceeds 1/(n(1-epsilon))",
            });
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InfeasibleWeights {
                reason: "entries do not sum to one",
            });
        }
        Ok(Self { w, epsilon })
    }

    pub fn uniform(n: usize, epsilon: f64) -> Result<Self> {
        Self::new(alloc::vec![1.0 / n as f64; n], epsilon)
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn cap(&self) -> f64 {
        cap(self.w.len(), self.epsilon)
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.w
    }
}

/// Per-entry cap `1/(n(1−ε))`.
pub fn cap(n: usize, epsilon: f64) -> f64 {
    1.0 / (n as f64 * (1.0 - epsilon))
}

pub(crate) fn validate_epsilon(epsilon: f64) -> Result<()> {
    // ε = 0 is admitted so degenerate cases can be tested; the estimator
    // itself always uses ε ≥ 1/n.
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::param("epsilon", "must lie in [0, 1/2)"));
    }
    Ok(())
}

/// Euclidean projection onto the truncated simplex.
///
/// The solution has the form `w_i = clip(v_i − θ, 0, cap)`; `θ` is found by a
/// sweep over the sorted breakpoints `{v_i − cap, v_i}`, so the result is exact
/// up to rounding.
pub fn project_truncated_simplex(v: &[f64], epsilon: f64) -> Result<TruncatedSimplexPoint> {
    validate_epsilon(epsilon)?;
    let n = v.len();
    if n == 0 {
        return Err(Error::InfeasibleWeights {
            reason: "empty weight vector",
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "simplex projection input",
        });
    }
    let cap = cap(n, epsilon);
    // n·cap = 1/(1−ε) ≥ 1, so the box always contains a point summing to one.
    assert!(n as f64 * cap >= 1.0 - 1e-12, "truncated simplex is empty");

    // (position, slope change): entering the free range at v_i − cap, leaving at v_i.
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    for &vi in v {
        events.push((vi - cap, -1.0));
        events.push((vi, 1.0));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // φ(θ) = Σ clip(v_i − θ, 0, cap) is nonincreasing, piecewise linear.
    let mut theta = events[0].0;
    let mut phi = n as f64 * cap;
    let mut slope = 0.0;
    let mut solution = theta;
    let mut found = false;
    for &(pos, change) in &events {
        let next = phi + slope * (pos - theta);
        if next <= 1.0 && slope < 0.0 {
            solution = theta + (1.0 - phi) / slope;
            found = true;
            break;
        }
        phi = next;
        theta = pos;
        slope += change;
    }
    if !found {
        // φ reaches 1 exactly at a breakpoint with zero slope afterwards; only
        // possible when n·cap == 1 (ε = 0).
        solution = theta;
    }
    let mut w: Vec<f64> = v.iter().map(|&vi| (vi - solution).clamp(0.0, cap)).collect();
    // Remove the rounding residue on the free coordinates.
    let total: f64 = w.iter().sum();
    let residue = 1.0 - total;
    if residue != 0.0 {
        let free: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0 && w[i] < cap).collect();
        if !free.is_empty() {
            let share = residue / free.len() as f64;
            for i in free {
                w[i] = (w[i] + share).clamp(0.0, cap);
            }
        }
    }
    TruncatedSimplexPoint::new(w, epsilon)
}

/// `min_{w in the truncated simplex} Σ w_i g_i`, attained by filling the
/// smallest coefficients up to the cap.
pub fn min_linear(g: &[f64], epsilon: f64) -> f64 {
    let n = g.len();
    let cap = cap(n, epsilon);
    let mut sorted: Vec<f64> = g.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut remaining = 1.0f64;
    let mut total = 0.0;
    for gi in sorted {
        if remaining <= 0.0 {
            break;
        }
        let take = remaining.min(cap);
        total += take * gi;
        remaining -= take;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        let p = project_truncated_simplex(&[0.2, 0.3, 0.5], 0.4).unwrap();
        for (a, b) in p.weights().iter().zip([0.2, 0.3, 0.5]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }

        let p = project_truncated_simplex(&[1.0, 0.0], 0.0).unwrap();
        assert_abs_diff_eq!(p.weights()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.weights()[1], 0.5, epsilon = 1e-15);

        let p = project_truncated_simplex(&[1.0, 0.0, 0.0], 1.0 / 3.0).unwrap();
        assert_abs_diff_eq!(p.weights()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.weights()[1], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.weights()[2], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_epsilon_and_points() {
        assert!(project_truncated_simplex(&[1.0], 0.5).is_err());
        assert!(TruncatedSimplexPoint::new(vec![0.7, 0.3], 0.0).is_err());
        assert!(TruncatedSimplexPoint::new(vec![0.5, 0.6], 0.2).is_err());
        assert!(TruncatedSimplexPoint::new(vec![0.6, 0.4], 0.2).is_ok());
    }

    #[test]
    fn min_linear_fills_smallest_first() {
        // n = 4, ε = 0.2 → cap = 1/3.2 = 0.3125.
        let v = min_linear(&[4.0, 1.0, 3.0, 2.0], 0.2);
        let want = 0.3125 * 1.0 + 0.3125 * 2.0 + 0.3125 * 3.0 + (1.0 - 3.0 * 0.3125) * 4.0;
        assert_abs_diff_eq!(v, want, epsilon = 1e-14);
    }

    // Projection characterization: w = P(v) iff ⟨v − w, u − w⟩ ≤ 0 for all
    // feasible u. Checked against vertices of the box-simplex and random
    // feasible points.
    proptest! {
        #[test]
        fn projection_is_feasible_and_optimal(
            v in proptest::collection::vec(-3.0f64..3.0, 2..40),
            eps_frac in 0.0f64..0.999,
            probes in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 40), 5),
        ) {
            let n = v.len();
            let epsilon = 0.49 * eps_frac;
            let p = project_truncated_simplex(&v, epsilon).unwrap();
            let w = p.weights();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            for probe in probes {
                let raw: Vec<f64> = probe.into_iter().take(n).collect();
                let u = project_truncated_simplex(&raw, epsilon).unwrap();
                let inner: f64 = (0..n).map(|i| (v[i] - w[i]) * (u.weights()[i] - w[i])).sum();
                prop_assert!(inner <= 1e-9, "variational inequality violated: {}", inner);
            }
            // Idempotent on its own output.
            let again = project_truncated_simplex(w, epsilon).unwrap();
            for (a, b) in again.weights().iter().zip(w) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
