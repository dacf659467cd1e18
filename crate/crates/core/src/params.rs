use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Market and problem constants.
///
/// The risky asset follows `dS = (mu - S) dt + dW` with unit mean-reversion
/// rate and volatility, and trading at rate `phi` executes at
/// `S + phi/(2*delta)`. Risk aversion is fixed at 1. Other mean-reversion
/// rates, volatilities, or risk aversions are handled by the caller rescaling
/// price, time, horizon, and depth before constructing `ModelParams`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Long-term mean of the price (price units).
    pub mu: f64,
    /// Initial price (price units).
    pub s0: f64,
    /// Market depth, strictly positive (shares per price unit per time unit).
    pub delta: f64,
    /// Trading horizon `T`, strictly positive (time units).
    pub horizon: f64,
    /// Initial position (shares).
    pub phi0: f64,
}

impl ModelParams {
    pub fn new(mu: f64, s0: f64, delta: f64, horizon: f64, phi0: f64) -> Result<Self> {
        let p = ModelParams {
            mu,
            s0,
            delta,
            horizon,
            phi0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the type invariants: everything finite, `delta > 0`,
    /// `horizon > 0`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("s0", self.s0),
            ("delta", self.delta),
            ("horizon", self.horizon),
            ("phi0", self.phi0),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite, got {v}")));
            }
        }
        if self.delta <= 0.0 {
            return Err(Error::domain(format!(
                "delta must be > 0, got {}",
                self.delta
            )));
        }
        if self.horizon <= 0.0 {
            return Err(Error::domain(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Deviation of the initial price from the long-term mean, `mu - s0`.
    pub fn initial_spread(&self) -> f64 {
        self.mu - self.s0
    }
}
