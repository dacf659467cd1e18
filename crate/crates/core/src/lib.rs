//! Optimal trading on a mean-reverting asset under linear temporary price impact.
//!
//! The market is an Ornstein-Uhlenbeck price `dS = (mu - S) dt + dW` (unit
//! mean-reversion rate and volatility) traded at rate `phi`, where execution
//! happens at `S + phi/(2*delta)` for a market depth `delta > 0`. Preferences
//! are exponential, `u(x) = -exp(-x)`. For this model the optimal feedback
//! strategy and the optimal expected utility have closed forms built from a
//! value-shape function `V(t)`; this crate evaluates them in overflow-safe
//! form and verifies them three independent ways:
//!
//! * [`analytic`] — the closed forms: `V(t)`, its derivative decomposition,
//!   the feedback coefficients, the optimal value and certainty equivalent;
//! * [`variational`] — the two calculus-of-variations problems behind the
//!   closed forms, each paired with a discrete minimizer (tridiagonal solve,
//!   conjugate gradient) acting as an independent oracle, plus the dual-value
//!   assembly that must reproduce `-log(-analytic_value)`;
//! * [`simulation`] — exact-transition OU path sampling with counter-based
//!   randomness, strategy integration, and a deterministic parallel Monte
//!   Carlo engine for value verification and perturbation (optimality)
//!   studies.
//!
//! With the default `parallel` feature the Monte Carlo engine fans out over
//! rayon; built with `--no-default-features` the same API runs sequentially.
//! Either way results are bit-identical for a fixed seed.

pub mod analytic;
pub mod error;
pub mod params;
pub mod quad;
pub mod rng;
pub mod simulation;
pub mod variational;

mod hyp;

pub use error::{Error, Result};
pub use params::ModelParams;
