//! Scalar inequalities used by the proofs for `(μ_e, W)` and the convex
//! Bernoulli couple, checked on dense grids.
//!
//! Each check is written in a logarithmic form that stays accurate where the
//! two sides nearly coincide (near `0`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::cost_w;

/// Outcome of a grid check of `margin(s) ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub name: String,
    pub points: usize,
    pub violations: usize,
    /// Smallest margin seen and where.
    pub worst_margin: f64,
    pub worst_at: f64,
}

impl ClaimReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// `n` points evenly spaced on `[a, b]`, endpoints included.
fn grid_points(a: f64, b: f64, n: usize) -> impl IndexedParallelIterator<Item = f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).into_par_iter().map(move |i| if i + 1 == n { b } else { a + i as f64 * h })
}

fn check(name: &str, pts: impl IndexedParallelIterator<Item = f64>, margin: impl Fn(f64) -> f64 + Sync) -> ClaimReport {
    let n = pts.len();
    let (violations, worst_margin, worst_at) = pts
        .map(|s| {
            let m = margin(s);
            ((!(m >= 0.0)) as usize, m, s)
        })
        .reduce(
            || (0, f64::INFINITY, f64::NAN),
            |a, b| {
                let (m, at) = if b.1 < a.1 || (b.1 == a.1 && b.2 < a.2) { (b.1, b.2) } else { (a.1, a.2) };
                (a.0 + b.0, m, at)
            },
        );
    ClaimReport { name: name.to_string(), points: n, violations, worst_margin, worst_at }
}

/// `(1 − 4W′(s)²)·e^{W(s)} ≥ 1`, as `ln(1 − 4W′²) + W ≥ 0`.
pub fn claim_w_derivative(n: usize, half_width: f64) -> ClaimReport {
    let w = cost_w();
    check("(1-4W'^2)e^W >= 1", grid_points(-half_width, half_width, n), |s| {
        let d = w.derivative(s).unwrap_or(2.0 / 9.0);
        (-4.0 * d * d).ln_1p() + w.eval(s)
    })
}

/// `e^{−u/18} ≤ 1 − 4u/81` on `(0, 4)`, as `ln(1 − 4u/81) + u/18 ≥ 0`.
pub fn claim_exp_linear(n: usize) -> ClaimReport {
    let h = 4.0 / (n + 1) as f64;
    let pts = (1..n + 1).into_par_iter().map(move |i| i as f64 * h);
    check("e^(-u/18) <= 1-4u/81", pts, |u| (-4.0 * u / 81.0).ln_1p() + u / 18.0)
}

/// `k(u) = u − u²` for `u ≤ ½`, `¼` beyond.
pub fn k_function(u: f64) -> f64 {
    if u <= 0.5 {
        u - u * u
    } else {
        0.25
    }
}

/// `e^{k(u)} ≤ 2 − e^{−u}` on `[0, b]`.
///
/// For `u ≤ ½` the claim reads `e^{−u²/2} cosh(u − u²/2) ≤ 1`; the margin
/// `u²/2 − ln(1 + 2 sinh²(v/2))` with `v = u − u²/2` has no cancellation.
pub fn claim_k_function(n: usize, b: f64) -> ClaimReport {
    check("e^k(u) <= 2-e^(-u)", grid_points(0.0, b, n), |u| {
        if u <= 0.5 {
            let v = u - 0.5 * u * u;
            let sh = (0.5 * v).sinh();
            0.5 * u * u - (2.0 * sh * sh).ln_1p()
        } else {
            (-0.5 * (-u).exp()).ln_1p() + std::f64::consts::LN_2 - k_function(u)
        }
    })
}

/// Largest absolute deviation in `½(e^{u−u²} + e^{−u}) = e^{−u²/2}cosh(u − u²/2)`.
pub fn cosh_identity_max_error(n: usize, b: f64) -> f64 {
    grid_points(0.0, b, n)
        .map(|u| {
            let lhs = 0.5 * ((u - u * u).exp() + (-u).exp());
            let rhs = (-0.5 * u * u).exp() * (u - 0.5 * u * u).cosh();
            (lhs - rhs).abs()
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claims_hold_on_small_grids() {
        assert!(claim_w_derivative(10_001, 10.0).holds());
        assert!(claim_exp_linear(10_000).holds());
        assert!(claim_k_function(10_001, 10.0).holds());
        assert!(cosh_identity_max_error(10_001, 10.0) < 1e-12);
    }

    #[test]
    fn log_forms_agree_with_direct_forms_away_from_zero() {
        let w = cost_w();
        for &s in &[0.7, 1.9, 2.5, -6.0] {
            let d = w.derivative(s).unwrap();
            let direct = (1.0 - 4.0 * d * d) * w.eval(s).exp() - 1.0;
            let logf = (-4.0 * d * d).ln_1p() + w.eval(s);
            assert_eq!(direct >= 0.0, logf >= 0.0);
        }
        for &u in &[0.3f64, 0.5, 2.0, 7.0] {
            let direct = 2.0 - (-u).exp() - k_function(u).exp();
            assert!(direct > 0.0);
        }
    }

    #[test]
    fn k_is_continuous_at_one_half() {
        assert_eq!(k_function(0.5), 0.25);
        assert!((k_function(0.5 + 1e-12) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn a_false_variant_is_detected() {
        // e^{u} ≤ 2 − e^{−u} fails for every u > 0
        let r = check("false", grid_points(0.0, 1.0, 101), |u| (-0.5 * (-u).exp()).ln_1p() + std::f64::consts::LN_2 - u);
        assert!(r.violations > 0);
    }
}
