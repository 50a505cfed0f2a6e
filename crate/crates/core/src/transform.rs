//! Fourier–Stieltjes transform of the Bernoulli convolution μ_λ.
//!
//! With `e_t(x) = exp(2πitx)` the transform is the infinite cosine product
//!
//! ```text
//!     μ̂_λ(t) = ∏_{k≥1} cos(2π λᵏ t)
//! ```
//!
//! and is evaluated here by truncating after `K` factors, with `K` picked so
//! that the certified tail bound stays below the requested tolerance.
//! Factors whose argument is an odd multiple of π/2 are detected exactly, so
//! Gram entries between distinct spectrum points come out as exact zeros.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{invalid, Error, Result};

/// Hard cap on product depth; only reachable for λ extremely close to 1.
pub const MAX_DEPTH: usize = 1 << 16;

/// Contraction ratio of the Bernoulli convolution, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRatio(f64);

impl ScaleRatio {
    pub const QUARTER: ScaleRatio = ScaleRatio(0.25);

    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda < 1.0 {
            Ok(ScaleRatio(lambda))
        } else {
            invalid(format!("scale ratio must lie in (0, 1), got {lambda}"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Half-width of the attractor, λ/(1−λ).
    pub fn support_radius(self) -> f64 {
        self.0 / (1.0 - self.0)
    }
}

impl Default for ScaleRatio {
    fn default() -> Self {
        ScaleRatio::QUARTER
    }
}

/// A truncated transform value together with its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformValue {
    pub t: f64,
    pub value: f64,
    pub depth: usize,
    pub tail_bound: f64,
}

/// `cos(2πx)` with exact results at the quarter points.
///
/// The reduction `x - round(x)` is exact in binary floating point, so the
/// zeros at odd multiples of 1/4 are hit exactly whenever `x` is.
pub fn cos_two_pi(x: f64) -> f64 {
    let r = (x - x.round()).abs();
    if r == 0.0 {
        1.0
    } else if r == 0.25 {
        0.0
    } else if r == 0.5 {
        -1.0
    } else {
        (TAU * r).cos()
    }
}

/// Certified bound on the error from dropping every factor beyond `depth`.
///
/// Uses `0 ≤ 1 − cos u ≤ u²/2` for each omitted factor and sums the
/// geometric series of the squared arguments.
pub fn tail_bound(t: f64, lambda: ScaleRatio, depth: usize) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let l = lambda.get();
    let lead = TAU * t.abs() * l.powi(depth as i32 + 1);
    0.5 * lead * lead / (1.0 - l * l)
}

fn tail_is_small(t: f64, lambda: ScaleRatio, depth: usize) -> bool {
    let l = lambda.get();
    // Every omitted factor must still be positive for the bound to apply.
    let arg_sum = TAU * t.abs() * l.powi(depth as i32 + 1) / (1.0 - l);
    arg_sum <= 0.5
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        invalid(format!("tolerance must be positive and finite, got {tol}"))
    }
}

/// Minimal product depth whose certified tail bound is at most `tol`.
pub fn truncation_depth(t: f64, lambda: ScaleRatio, tol: f64) -> Result<usize> {
    check_tol(tol)?;
    if !t.is_finite() {
        return invalid(format!("frequency must be finite, got {t}"));
    }
    let mut depth = 1;
    while !(tail_is_small(t, lambda, depth) && tail_bound(t, lambda, depth) <= tol) {
        depth += 1;
        if depth > MAX_DEPTH {
            return Err(Error::Range(format!(
                "product depth for t={t}, lambda={} exceeds {MAX_DEPTH}",
                lambda.get()
            )));
        }
    }
    Ok(depth)
}

/// Validated evaluator for μ̂_λ at a fixed tolerance.
#[derive(Debug, Clone, Copy)]
pub struct Transform {
    lambda: ScaleRatio,
    tol: f64,
}

impl Transform {
    pub fn new(lambda: ScaleRatio, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        Ok(Transform { lambda, tol })
    }

    /// The λ = 1/4 transform at tolerance `tol`.
    pub fn quarter(tol: f64) -> Result<Self> {
        Self::new(ScaleRatio::QUARTER, tol)
    }

    pub fn lambda(&self) -> ScaleRatio {
        self.lambda
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn evaluate(&self, t: f64) -> Result<TransformValue> {
        let depth = truncation_depth(t, self.lambda, self.tol)?;
        Ok(self.evaluate_at_depth(t, depth))
    }

    /// Value only. Panics on non-finite `t`.
    pub fn value(&self, t: f64) -> f64 {
        self.evaluate(t)
            .unwrap_or_else(|e| panic!("transform evaluation failed: {e}"))
            .value
    }

    /// Product of the first `depth` factors, multiplied from the innermost
    /// factor outwards.
    pub fn evaluate_at_depth(&self, t: f64, depth: usize) -> TransformValue {
        let t_abs = t.abs();
        let l = self.lambda.get();
        let mut factors = Vec::with_capacity(depth);
        let mut x = t_abs;
        for _ in 0..depth {
            x *= l;
            let f = cos_two_pi(x);
            if f == 0.0 {
                return TransformValue {
                    t,
                    value: 0.0,
                    depth,
                    tail_bound: 0.0,
                };
            }
            factors.push(f);
        }
        let value = factors.iter().rev().fold(1.0, |acc, f| acc * f);
        TransformValue {
            t,
            value,
            depth,
            tail_bound: tail_bound(t, self.lambda, depth),
        }
    }
}

/// μ̂_λ(t) truncated to absolute accuracy `tol`.
pub fn mu_hat(t: f64, lambda: ScaleRatio, tol: f64) -> Result<TransformValue> {
    Transform::new(lambda, tol)?.evaluate(t)
}

/// `|μ̂(4t) − cos(2πt) μ̂(t)|` for λ = 1/4 at the given tolerance.
pub fn functional_eq_residual_with(t: f64, tol: f64) -> Result<f64> {
    let tr = Transform::quarter(tol)?;
    let scaled = tr.evaluate(4.0 * t)?.value;
    let base = tr.evaluate(t)?.value;
    Ok((scaled - cos_two_pi(t) * base).abs())
}

/// Residual of the scaling identity `μ̂(4t) = cos(2πt) μ̂(t)` at tol = 1e-12.
pub fn functional_eq_residual(t: f64) -> f64 {
    functional_eq_residual_with(t, crate::DEFAULT_TOL)
        .unwrap_or_else(|e| panic!("functional equation residual failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter() -> Transform {
        Transform::quarter(1e-12).unwrap()
    }

    #[test]
    fn value_at_zero_is_exactly_one() {
        let v = mu_hat(0.0, ScaleRatio::QUARTER, 1e-12).unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(v.tail_bound, 0.0);
        assert_eq!(v.depth, 1);
    }

    #[test]
    fn first_factor_vanishes_at_one() {
        let v = quarter().evaluate(1.0).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.tail_bound, 0.0);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(
            mu_hat(1.0, ScaleRatio::QUARTER, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(mu_hat(1.0, ScaleRatio::QUARTER, -1e-3).is_err());
        assert!(truncation_depth(1.0, ScaleRatio::QUARTER, f64::NAN).is_err());
        assert!(ScaleRatio::new(1.0).is_err());
        assert!(ScaleRatio::new(0.0).is_err());
    }

    #[test]
    fn quarter_points_are_exact() {
        assert_eq!(cos_two_pi(0.25), 0.0);
        assert_eq!(cos_two_pi(-1.75), 0.0);
        assert_eq!(cos_two_pi(3.0), 1.0);
        assert_eq!(cos_two_pi(2.5), -1.0);
        assert_eq!(cos_two_pi(1e300), 1.0);
    }

    #[test]
    fn depth_for_thirty_is_moderate() {
        let k = truncation_depth(30.0, ScaleRatio::QUARTER, 1e-12).unwrap();
        assert!(k <= 40, "depth {k}");
        assert!(tail_bound(30.0, ScaleRatio::QUARTER, k) <= 1e-12);
        // minimality
        let prev = k - 1;
        assert!(
            prev == 0
                || tail_bound(30.0, ScaleRatio::QUARTER, prev) > 1e-12
                || !tail_is_small(30.0, ScaleRatio::QUARTER, prev)
        );
    }

    #[test]
    fn depth_grows_logarithmically() {
        let base = truncation_depth(1.0, ScaleRatio::QUARTER, 1e-12).unwrap();
        for j in 1..=20 {
            let k = truncation_depth(4f64.powi(j), ScaleRatio::QUARTER, 1e-12).unwrap();
            assert_eq!(k, base + j as usize, "t = 4^{j}");
        }
    }

    #[test]
    fn scaling_identity_at_thirty() {
        assert!(functional_eq_residual(30.0) <= 1e-11);
        let tr = quarter();
        assert!((tr.value(120.0) - tr.value(30.0)).abs() <= 1e-11);
        assert_eq!(functional_eq_residual(0.0), 0.0);
        assert!(functional_eq_residual(7.5) <= 1e-11);
    }

    #[test]
    fn generic_lambda_is_supported() {
        let tr = Transform::new(ScaleRatio::new(0.5).unwrap(), 1e-12).unwrap();
        // λ = 1/2 gives Lebesgue measure on [-1, 1]: μ̂(t) = sin(2πt)/(2πt).
        let t = 0.3;
        let expect = (TAU * t).sin() / (TAU * t);
        assert!((tr.value(t) - expect).abs() < 1e-10);
    }
}
