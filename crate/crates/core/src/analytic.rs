//! Closed forms for the optimal strategy and value.
//!
//! Everything is driven by the value-shape function
//!
//! ```text
//! V(t) = [q sinh(qt) + q^2 w(t) cosh(qt)]
//!        / [q w(t) sinh(qt) + (1 + d^2) cosh(qt) + 2d]  -  1,
//! q = sqrt(1 + d),  w(t) = 1 + d + d t,  d = delta,
//! ```
//!
//! which is 0 at t = 0, strictly increasing, and approaches
//! `sqrt(1+delta) - 1` from below at rate O(delta/t). The optimal expected
//! utility over horizon `T` starting flat is
//!
//! ```text
//! -exp( -1/2 V(T) (mu - S0)^2 - 1/2 \int_0^T V(t) dt ),
//! ```
//!
//! and the optimal trading rate is the feedback rule
//! `phi = delta (kappa(tau) (mu - S) - Phi) / denom(tau)` in time-to-maturity
//! `tau = T - t` (coefficients in [`feedback_coefficients`]).
//!
//! All hyperbolic expressions are evaluated through `tanh`, `1/sinh`, and
//! `1/cosh` so that arguments up to `sqrt(1+delta) t = 1e4` and far beyond
//! produce finite values. The raw ratio of the display above is divided
//! through by `cosh(qt)` first; the lone `2 delta` term becomes
//! `2 delta sech(qt)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyp;
use crate::params::ModelParams;
use crate::quad;

/// The value-shape function for a fixed market depth.
///
/// `delta = 0` is admitted here (it makes `V` identically zero and is handy
/// as a degenerate test case) even though [`ModelParams`] rejects it: the
/// execution-price model itself has no meaning at zero depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueShape {
    delta: f64,
}

/// `dV/dt` together with its three nonnegative components:
/// `vdot = delta (1+delta) (a + b + c) / M(t)^2` where `M` is the
/// denominator of `V`. All three vanish at `t = 0`, so `vdot(0) = 0` and
/// `V` grows like `delta t^3 / 3` out of the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueShapeDerivative {
    pub vdot: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ValueShape {
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::domain(format!(
                "delta must be finite and >= 0, got {delta}"
            )));
        }
        Ok(ValueShape { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Least upper bound of `V`: `sqrt(1 + delta) - 1`.
    pub fn limit(&self) -> f64 {
        (1.0 + self.delta).sqrt() - 1.0
    }

    /// `V(t)`, finite for arbitrarily large `t`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
        }
        Ok(self.value_unchecked(t))
    }

    fn value_unchecked(&self, t: f64) -> f64 {
        let d = self.delta;
        if t == 0.0 || d == 0.0 {
            return 0.0;
        }
        let q = (1.0 + d).sqrt();
        let u = q * t;
        let w = 1.0 + d + d * t;
        let th = u.tanh();
        let sech = hyp::sech(u);
        let num = q * th + q * q * w;
        let den = q * w * th + (1.0 + d * d) + 2.0 * d * sech;
        num / den - 1.0
    }

    /// `dV/dt` and its components. The components are returned on the raw
    /// scale of the display (they grow like `cosh^2`), while `vdot` itself
    /// is formed from the `sech^2`-scaled quotient and stays finite for any
    /// argument.
    pub fn derivative(&self, t: f64) -> Result<ValueShapeDerivative> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
        }
        let d = self.delta;
        if d <= 0.0 {
            return Err(Error::domain(format!(
                "derivative components need delta > 0, got {d}"
            )));
        }
        let q2 = 1.0 + d;
        let q = q2.sqrt();
        let u = q * t;
        let w = 1.0 + d + d * t;
        let sh = u.sinh();
        // cosh - 1 = 2 sinh^2(u/2) avoids cancellation near 0.
        let cosh_m1 = 2.0 * (0.5 * u).sinh().powi(2);
        let a = 2.0 * q * w * sh - 2.0 * q2 * q2 * t;
        let b = 2.0 * q2 * cosh_m1 - (d + d * d) * t * t;
        let c = d * d * sh * sh;

        // Same bracket scaled by sech^2 for the quotient.
        let th = u.tanh();
        let sech = hyp::sech(u);
        let a_s = 2.0 * q * w * th * sech - 2.0 * q2 * q2 * t * sech * sech;
        let b_s = 2.0 * q2 * sech - (2.0 * q2 + d * q2 * t * t) * sech * sech;
        let c_s = d * d * th * th;
        let m_s = q * w * th + (1.0 + d * d) + 2.0 * d * sech;
        let vdot = d * q2 * (a_s + b_s + c_s) / (m_s * m_s);
        Ok(ValueShapeDerivative { vdot, a, b, c })
    }

    /// `\int_0^T V(t) dt` by adaptive Simpson with absolute tolerance `tol`.
    pub fn integral(&self, t_end: f64, tol: f64) -> Result<f64> {
        if !t_end.is_finite() || t_end < 0.0 {
            return Err(Error::domain(format!(
                "integration horizon must be >= 0, got {t_end}"
            )));
        }
        quad::adaptive_simpson(|t| self.value_unchecked(t), 0.0, t_end, tol)
    }
}

/// Coefficients of the feedback rule at a given time-to-maturity `tau`:
///
/// ```text
/// kappa(tau) = 1 + (1-d)/(1+d)^{3/2} tanh(q tau / 2) + d tau/(1+d)
/// denom(tau) = 1 + d tau/(1+d) + q/sinh(q tau)
///                + (1+d^2)/(1+d)^{3/2} tanh(q tau / 2)
/// ```
///
/// `kappa` multiplies `(mu - S)` to form the target position and tends to 1
/// as `tau -> 0`; `denom >= 1` is the inverse trading speed toward that
/// target and diverges both as `tau -> 0` (through `1/sinh`) and as
/// `tau -> infinity` (through the linear term).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackCoefficients {
    pub kappa: f64,
    pub denom: f64,
}

/// Evaluates the feedback coefficients; overflow-safe for `q tau` up to 1e4
/// and beyond (`tanh` saturates, `1/sinh` underflows to zero).
pub fn feedback_coefficients(delta: f64, tau: f64) -> Result<FeedbackCoefficients> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::domain(format!(
            "delta must be finite and > 0, got {delta}"
        )));
    }
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::domain(format!(
            "tau must be finite and > 0, got {tau}"
        )));
    }
    let d = delta;
    let q2 = 1.0 + d;
    let q = q2.sqrt();
    let u = q * tau;
    let th_half = (0.5 * u).tanh();
    let lin = d * tau / q2;
    let pow32 = q2 * q; // (1+d)^{3/2}
    let kappa = 1.0 + (1.0 - d) / pow32 * th_half + lin;
    let denom = 1.0 + lin + q * hyp::csch(u) + (1.0 + d * d) / pow32 * th_half;
    Ok(FeedbackCoefficients { kappa, denom })
}

/// Optimal trading rate at time `t`, price `price`, position `position`:
/// `delta (kappa(T-t) (mu - price) - position) / denom(T-t)`, extended by
/// continuity to 0 at `t = T` where the denominator diverges.
pub fn feedback_rate(params: &ModelParams, t: f64, price: f64, position: f64) -> Result<f64> {
    params.validate()?;
    if !t.is_finite() || t < 0.0 || t > params.horizon {
        return Err(Error::domain(format!(
            "t must lie in [0, {}], got {t}",
            params.horizon
        )));
    }
    if !price.is_finite() || !position.is_finite() {
        return Err(Error::domain(
            "price and position must be finite".to_string(),
        ));
    }
    let tau = params.horizon - t;
    if tau == 0.0 {
        return Ok(0.0);
    }
    let c = feedback_coefficients(params.delta, tau)?;
    Ok(params.delta * (c.kappa * (params.mu - price) - position) / c.denom)
}

/// `1/2 V(T) (mu - S0)^2 + 1/2 \int_0^T V`, the exponent of the optimal
/// value. Shared by [`analytic_value`] and [`certainty_equivalent`].
fn value_exponent(params: &ModelParams, tol: f64) -> Result<f64> {
    params.validate()?;
    if params.phi0 != 0.0 {
        return Err(Error::Unsupported(format!(
            "the closed-form value requires phi0 = 0, got {}",
            params.phi0
        )));
    }
    let shape = ValueShape::new(params.delta)?;
    let spread = params.initial_spread();
    let v_end = shape.value(params.horizon)?;
    let integral = shape.integral(params.horizon, tol)?;
    Ok(0.5 * v_end * spread * spread + 0.5 * integral)
}

/// Optimal expected utility `-exp(-1/2 V(T)(mu-S0)^2 - 1/2 \int_0^T V)`.
///
/// Lies in `(-1, 0)` for `T > 0`; equals -1 exactly when the exponent is 0.
/// Only available for a flat initial position (`phi0 = 0`).
pub fn analytic_value(params: &ModelParams, tol: f64) -> Result<f64> {
    Ok(-(-value_exponent(params, tol)?).exp())
}

/// Certainty equivalent `c(T) = log(-analytic_value)`, i.e. the negated
/// exponent. Computed on the same path as [`analytic_value`], so the
/// identity `certainty_equivalent = ln(-analytic_value)` is exact.
pub fn certainty_equivalent(params: &ModelParams, tol: f64) -> Result<f64> {
    Ok(-value_exponent(params, tol)?)
}

/// Free-function form of [`ValueShape::value`].
pub fn value_shape(delta: f64, t: f64) -> Result<f64> {
    ValueShape::new(delta)?.value(t)
}

/// Free-function form of [`ValueShape::derivative`].
pub fn value_shape_derivative(delta: f64, t: f64) -> Result<ValueShapeDerivative> {
    ValueShape::new(delta)?.derivative(t)
}

/// Free-function form of [`ValueShape::integral`].
pub fn value_shape_integral(delta: f64, t_end: f64, tol: f64) -> Result<f64> {
    ValueShape::new(delta)?.integral(t_end, tol)
}
