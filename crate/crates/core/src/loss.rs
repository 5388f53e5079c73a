//! The Bernstein-smoothed hinge loss.
//!
//! The hinge `v(t) = (1 - t)_+` is replaced on the band `|t - 1| <= delta` by
//! the unique quartic that joins both linear pieces with matching value, slope
//! and curvature. Outside the band the loss equals the hinge exactly, so the
//! result is a C² convex function with `0 <= B'' <= 3 / (4 delta)`.

use serde::{Deserialize, Serialize};

use crate::error::{BernError, Result};

/// Relative slack added to the curvature bound so the quadratic surrogate
/// majorizes strictly.
pub const CURVATURE_SLACK: f64 = 1e-6;

/// Smoothing configuration of the loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LossSpecRepr", into = "LossSpecRepr")]
pub struct LossSpec {
    delta: f64,
}

#[derive(Serialize, Deserialize)]
struct LossSpecRepr {
    delta: f64,
}

impl TryFrom<LossSpecRepr> for LossSpec {
    type Error = BernError;
    fn try_from(r: LossSpecRepr) -> Result<Self> {
        LossSpec::new(r.delta)
    }
}

impl From<LossSpec> for LossSpecRepr {
    fn from(s: LossSpec) -> Self {
        LossSpecRepr { delta: s.delta }
    }
}

impl LossSpec {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(BernError::InvalidDelta(delta));
        }
        Ok(LossSpec { delta })
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Upper bound `L = 3 / (4 delta)` of the second derivative.
    #[inline]
    pub fn big_l(&self) -> f64 {
        3.0 / (4.0 * self.delta)
    }

    /// `(1 + 1e-6) L`, the curvature used by the coordinate-descent surrogate.
    #[inline]
    pub fn big_l_relaxed(&self) -> f64 {
        (1.0 + CURVATURE_SLACK) * self.big_l()
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        bern_loss(t, self)
    }

    #[inline]
    pub fn grad(&self, t: f64) -> f64 {
        bern_grad(t, self)
    }

    #[inline]
    pub fn hess(&self, t: f64) -> f64 {
        bern_hess(t, self)
    }
}

/// The hinge loss `max(1 - t, 0)`.
///
/// Panics on non-finite input.
pub fn hinge(t: f64) -> f64 {
    assert!(t.is_finite(), "hinge: non-finite argument {t}");
    (1.0 - t).max(0.0)
}

/// `s = 1 - t` clamped to the band `[-delta, delta]`. The band test itself is
/// done by the callers; the clamp only absorbs rounding in `1 - t`.
#[inline]
fn band_offset(t: f64, delta: f64) -> f64 {
    (1.0 - t).clamp(-delta, delta)
}

/// Smoothed hinge value.
///
/// Inside the band we write `s = 1 - t` and `u = s + delta`, so the quartic
/// reads `u^3 (4 delta - u) / (16 delta^3)`. For `s >= 0` the equivalent
/// split `s + (delta - s)^3 (s + 3 delta) / (16 delta^3)` is used instead: both
/// terms are nonnegative, which keeps `B >= hinge` exact in floating point.
#[inline]
pub fn bern_loss(t: f64, spec: &LossSpec) -> f64 {
    debug_assert!(t.is_finite());
    let d = spec.delta;
    if (t - 1.0).abs() > d {
        return if t < 1.0 { 1.0 - t } else { 0.0 };
    }
    let s = band_offset(t, d);
    let denom = 16.0 * d * d * d;
    if s >= 0.0 {
        let w = d - s;
        s + w * w * w * (s + 3.0 * d) / denom
    } else {
        let u = s + d;
        u * u * u * (4.0 * d - u) / denom
    }
}

/// First derivative, always in `[-1, 0]`.
#[inline]
pub fn bern_grad(t: f64, spec: &LossSpec) -> f64 {
    debug_assert!(t.is_finite());
    let d = spec.delta;
    if (t - 1.0).abs() > d {
        return if t < 1.0 { -1.0 } else { 0.0 };
    }
    let u = band_offset(t, d) + d;
    (u * u * (u - 3.0 * d) * (0.25 / (d * d * d))).clamp(-1.0, 0.0)
}

/// Second derivative, always in `[0, 3 / (4 delta)]`.
#[inline]
pub fn bern_hess(t: f64, spec: &LossSpec) -> f64 {
    debug_assert!(t.is_finite());
    let d = spec.delta;
    if (t - 1.0).abs() > d {
        return 0.0;
    }
    let r = band_offset(t, d) / d;
    spec.big_l() * (1.0 - r * r)
}
