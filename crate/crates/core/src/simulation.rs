//! Path simulation and the Monte Carlo verification engine.
//!
//! Prices are sampled with the exact OU transition
//! `S_{k+1} = mu + (S_k - mu) e^{-h} + eps_k sqrt((1 - e^{-2h})/2)`, so the
//! only discretization error in a Monte Carlo run comes from integrating the
//! strategy. Shocks are counter-based (see [`crate::rng`]): path `i` is the
//! same bit-for-bit no matter how many paths run, in what order, or on how
//! many threads. Wealth is accumulated in two algebraically equivalent forms
//! (a Riemann form against the terminal price and a stochastic-integral
//! form); their gap is a direct readout of the integration error.
//!
//! With the `parallel` feature (default) paths fan out over rayon into a
//! preallocated, index-addressed buffer and are reduced in index order, so
//! estimates are identical for every worker count; without it the same code
//! runs sequentially.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::analytic;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng;

/// Uniform time grid on `[t0, t1]` with `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
            return Err(Error::domain(format!("bad grid span [{t0}, {t1}]")));
        }
        if n_steps == 0 {
            return Err(Error::domain("n_steps must be >= 1".to_string()));
        }
        Ok(TimeGrid { t0, t1, n_steps })
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    /// Node `k` as `t0 + k * h` in fused form, immune to accumulation drift.
    pub fn node(&self, k: usize) -> f64 {
        (k as f64).mul_add(self.step(), self.t0)
    }
}

/// One simulated price path with the shocks that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub grid: TimeGrid,
    /// Prices at the nodes, length `n_steps + 1`, `prices[0] = S0`.
    pub prices: Vec<f64>,
    /// Standard normal draws, one per step.
    pub shocks: Vec<f64>,
}

/// A strategy integrated along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTrace {
    /// Trading rate at each node (the final node's rate is recorded but gets
    /// zero quadrature weight).
    pub rates: Vec<f64>,
    /// Position at each node; `positions[0] = phi0`.
    pub positions: Vec<f64>,
    /// `phi0 (S_T - S_0) + sum phi_k (S_T - S_k) h - sum phi_k^2 h/(2 delta)`.
    pub wealth_riemann: f64,
    /// `sum Phi_k (S_{k+1} - S_k) - sum phi_k^2 h/(2 delta)`; the form fed to
    /// the utility (lower discretization noise).
    pub wealth_ito: f64,
}

/// Monte Carlo estimate of the expected utility `E[-exp(-wealth)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub n_paths: u64,
    /// Sample mean of the path utilities (always <= 0).
    pub estimate: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub seed: u64,
    /// Fingerprint of the run parameters (model, grid, paths, seed, policy).
    pub config_digest: String,
}

/// A trading rule `(t, price, position) -> rate`. Implementations must be
/// pure: the engine may evaluate paths in any order and re-evaluate them
/// under perturbations on shared noise.
pub trait Policy: Sync {
    fn rate(&self, t: f64, price: f64, position: f64) -> f64;

    /// Short label used in run fingerprints and reports.
    fn label(&self) -> String {
        "custom".to_string()
    }
}

impl<F: Fn(f64, f64, f64) -> f64 + Sync> Policy for F {
    fn rate(&self, t: f64, price: f64, position: f64) -> f64 {
        self(t, price, position)
    }
}

/// Never trades.
#[derive(Debug, Clone, Copy)]
pub struct ZeroPolicy;

impl Policy for ZeroPolicy {
    fn rate(&self, _t: f64, _price: f64, _position: f64) -> f64 {
        0.0
    }
    fn label(&self) -> String {
        "zero".to_string()
    }
}

/// The closed-form optimal feedback rule for a parameter set.
#[derive(Debug, Clone, Copy)]
pub struct OptimalPolicy {
    params: ModelParams,
}

impl OptimalPolicy {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(OptimalPolicy { params })
    }

    fn rate_at(&self, t: f64, price: f64, position: f64) -> f64 {
        let tau = self.params.horizon - t;
        if tau <= 0.0 {
            return 0.0;
        }
        match analytic::feedback_coefficients(self.params.delta, tau) {
            Ok(c) => self.params.delta * (c.kappa * (self.params.mu - price) - position) / c.denom,
            Err(_) => f64::NAN,
        }
    }
}

impl Policy for OptimalPolicy {
    fn rate(&self, t: f64, price: f64, position: f64) -> f64 {
        self.rate_at(t, price, position)
    }
    fn label(&self) -> String {
        "optimal".to_string()
    }
}

/// Structured modifications of the optimal policy for the optimality study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    /// Multiply every rate by a constant.
    Scale(f64),
    /// Evaluate the rule at the lagged time `max(t - lag, 0)`.
    Lag(f64),
    /// Trade at the initial rate for the whole horizon.
    FreezeInitial,
}

impl Perturbation {
    pub fn label(&self) -> String {
        match self {
            Perturbation::Scale(c) => format!("scale{c}"),
            Perturbation::Lag(l) => format!("lag{l}"),
            Perturbation::FreezeInitial => "freeze_initial".to_string(),
        }
    }
}

/// The optimal policy with one perturbation applied.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedPolicy {
    base: OptimalPolicy,
    kind: Perturbation,
    frozen_rate: f64,
}

impl PerturbedPolicy {
    pub fn new(base: OptimalPolicy, kind: Perturbation) -> Self {
        let frozen_rate = base.rate_at(0.0, base.params.s0, base.params.phi0);
        PerturbedPolicy {
            base,
            kind,
            frozen_rate,
        }
    }
}

impl Policy for PerturbedPolicy {
    fn rate(&self, t: f64, price: f64, position: f64) -> f64 {
        match self.kind {
            Perturbation::Scale(c) => c * self.base.rate_at(t, price, position),
            Perturbation::Lag(l) => self.base.rate_at((t - l).max(0.0), price, position),
            Perturbation::FreezeInitial => self.frozen_rate,
        }
    }
    fn label(&self) -> String {
        format!("optimal+{}", self.kind.label())
    }
}

/// Samples one OU path with the exact transition. The grid must span
/// `[0, params.horizon]`.
pub fn sample_ou_path(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> Result<PathSample> {
    params.validate()?;
    check_grid(params, grid)?;
    let h = grid.step();
    let decay = (-h).exp();
    let step_sd = (-0.5 * (-2.0 * h).exp_m1()).sqrt();
    let mut prices = Vec::with_capacity(grid.n_steps + 1);
    let mut shocks = Vec::with_capacity(grid.n_steps);
    prices.push(params.s0);
    let mut s = params.s0;
    for k in 0..grid.n_steps {
        let eps = rng::standard_normal(seed, path_index, k as u64);
        s = params.mu + (s - params.mu) * decay + step_sd * eps;
        prices.push(s);
        shocks.push(eps);
    }
    Ok(PathSample {
        grid: *grid,
        prices,
        shocks,
    })
}

/// The noise-free path (all shocks zero): `S` decays exponentially toward
/// `mu`. Test hook for strategy integration.
pub fn zero_noise_path(params: &ModelParams, grid: &TimeGrid) -> Result<PathSample> {
    params.validate()?;
    check_grid(params, grid)?;
    let h = grid.step();
    let decay = (-h).exp();
    let mut prices = Vec::with_capacity(grid.n_steps + 1);
    prices.push(params.s0);
    let mut s = params.s0;
    for _ in 0..grid.n_steps {
        s = params.mu + (s - params.mu) * decay;
        prices.push(s);
    }
    Ok(PathSample {
        grid: *grid,
        prices,
        shocks: vec![0.0; grid.n_steps],
    })
}

fn check_grid(params: &ModelParams, grid: &TimeGrid) -> Result<()> {
    if grid.t0 != 0.0 || grid.t1 != params.horizon {
        return Err(Error::domain(format!(
            "grid [{}, {}] does not span [0, {}]",
            grid.t0, grid.t1, params.horizon
        )));
    }
    Ok(())
}

/// Integrates a policy along a path: explicit Euler on the position at the
/// price nodes, wealth accumulated in both forms.
pub fn integrate_strategy(
    params: &ModelParams,
    path: &PathSample,
    policy: &dyn Policy,
) -> Result<StrategyTrace> {
    params.validate()?;
    check_grid(params, &path.grid)?;
    if path.prices.len() != path.grid.n_steps + 1 {
        return Err(Error::domain(format!(
            "path has {} prices for {} steps",
            path.prices.len(),
            path.grid.n_steps
        )));
    }
    let n = path.grid.n_steps;
    let h = path.grid.step();
    let s_end = path.prices[n];

    let mut rates = Vec::with_capacity(n + 1);
    let mut positions = Vec::with_capacity(n + 1);
    let mut position = params.phi0;
    positions.push(position);

    let mut trade_riemann = 0.0;
    let mut trade_ito = 0.0;
    let mut impact = 0.0;
    for k in 0..n {
        let t = path.grid.node(k);
        let price = path.prices[k];
        let rate = policy.rate(t, price, position);
        if !rate.is_finite() {
            return Err(Error::Integration { step: k, t });
        }
        rates.push(rate);
        trade_riemann += rate * (s_end - price) * h;
        trade_ito += position * (path.prices[k + 1] - price);
        impact += rate * rate * h;
        position += rate * h;
        positions.push(position);
    }
    // rate at the terminal node, recorded for completeness
    let final_rate = policy.rate(path.grid.node(n), s_end, position);
    if !final_rate.is_finite() {
        return Err(Error::Integration {
            step: n,
            t: path.grid.node(n),
        });
    }
    rates.push(final_rate);

    let impact_cost = impact / (2.0 * params.delta);
    let mark_to_market = params.phi0 * (s_end - path.prices[0]);
    Ok(StrategyTrace {
        rates,
        positions,
        wealth_riemann: mark_to_market + trade_riemann - impact_cost,
        wealth_ito: mark_to_market + trade_ito - impact_cost,
    })
}

/// Utility of a single path under a policy.
fn path_utility(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
    policy: &dyn Policy,
) -> Result<f64> {
    let path = sample_ou_path(params, grid, seed, path_index)?;
    let trace = integrate_strategy(params, &path, policy)?;
    let w = trace.wealth_ito;
    // -w beyond ~709 overflows exp; treat as a fatal diagnostic
    if -w > 700.0 {
        return Err(Error::PathOverflow {
            path_index,
            wealth: w,
        });
    }
    Ok(-(-w).exp())
}

/// Per-path utilities, parallel when the `parallel` feature is on. The output
/// is index-addressed, so the schedule cannot change it.
fn path_utilities(
    params: &ModelParams,
    grid: &TimeGrid,
    n_paths: u64,
    seed: u64,
    policy: &dyn Policy,
) -> Result<Vec<f64>> {
    #[cfg(feature = "parallel")]
    {
        (0..n_paths)
            .into_par_iter()
            .map(|i| path_utility(params, grid, seed, i, policy))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_paths)
            .map(|i| path_utility(params, grid, seed, i, policy))
            .collect()
    }
}

/// Mean and standard error in fixed index order (two-pass).
fn summarize(utilities: &[f64]) -> (f64, f64) {
    let n = utilities.len() as f64;
    let mean = utilities.iter().sum::<f64>() / n;
    let ss = utilities
        .iter()
        .map(|u| {
            let d = u - mean;
            d * d
        })
        .sum::<f64>();
    let se = if utilities.len() > 1 {
        (ss / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    (mean, se)
}

/// FNV-1a fingerprint of the run parameters; stable across runs and builds.
fn run_digest(
    params: &ModelParams,
    grid: &TimeGrid,
    n_paths: u64,
    seed: u64,
    label: &str,
) -> String {
    let canonical = format!(
        "mu={:?};s0={:?};delta={:?};horizon={:?};phi0={:?};t0={:?};t1={:?};n_steps={};n_paths={};seed={};policy={}",
        params.mu, params.s0, params.delta, params.horizon, params.phi0,
        grid.t0, grid.t1, grid.n_steps, n_paths, seed, label
    );
    let mut hash = 0xcbf29ce484222325u64;
    for b in canonical.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

/// Monte Carlo estimate of `E[-exp(-wealth)]` under `policy`.
///
/// Deterministic for fixed `(seed, grid, n_paths)` regardless of the worker
/// count: shocks are counter-based per `(seed, path, step)` and the reduction
/// runs in path order.
pub fn monte_carlo_value(
    params: &ModelParams,
    grid: &TimeGrid,
    n_paths: u64,
    seed: u64,
    policy: &dyn Policy,
) -> Result<MonteCarloReport> {
    params.validate()?;
    check_grid(params, grid)?;
    if n_paths < 2 {
        return Err(Error::domain(format!("need n_paths >= 2, got {n_paths}")));
    }
    let utilities = path_utilities(params, grid, n_paths, seed, policy)?;
    let (estimate, std_error) = summarize(&utilities);
    Ok(MonteCarloReport {
        n_paths,
        estimate,
        std_error,
        seed,
        config_digest: run_digest(params, grid, n_paths, seed, &policy.label()),
    })
}

/// One perturbed policy evaluated on the same noise as the optimal run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOutcome {
    pub label: String,
    pub report: MonteCarloReport,
    /// Mean of `utility(perturbed) - utility(optimal)` over shared paths.
    pub paired_mean_diff: f64,
    /// Standard error of that paired difference.
    pub paired_se: f64,
}

/// Result of [`perturbation_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationStudy {
    pub optimal: MonteCarloReport,
    pub outcomes: Vec<PerturbationOutcome>,
}

/// Evaluates each perturbation of the optimal policy on the same paths
/// (common random numbers) and reports paired differences. A perturbation
/// "beats" the optimum only through noise; the acceptance suite requires
/// every paired mean to stay below 3 paired standard errors.
pub fn perturbation_study(
    params: &ModelParams,
    grid: &TimeGrid,
    n_paths: u64,
    seed: u64,
    perturbations: &[Perturbation],
) -> Result<PerturbationStudy> {
    if perturbations.is_empty() {
        return Err(Error::domain("perturbation list is empty".to_string()));
    }
    let optimal_policy = OptimalPolicy::new(*params)?;
    let base_utils = path_utilities(params, grid, n_paths, seed, &optimal_policy)?;
    let (estimate, std_error) = summarize(&base_utils);
    let optimal = MonteCarloReport {
        n_paths,
        estimate,
        std_error,
        seed,
        config_digest: run_digest(params, grid, n_paths, seed, &optimal_policy.label()),
    };

    let mut outcomes = Vec::with_capacity(perturbations.len());
    for kind in perturbations {
        let policy = PerturbedPolicy::new(optimal_policy, *kind);
        let utils = path_utilities(params, grid, n_paths, seed, &policy)?;
        let (est, se) = summarize(&utils);
        let diffs: Vec<f64> = utils.iter().zip(&base_utils).map(|(a, b)| a - b).collect();
        let (paired_mean_diff, paired_se) = summarize(&diffs);
        outcomes.push(PerturbationOutcome {
            label: policy.label(),
            report: MonteCarloReport {
                n_paths,
                estimate: est,
                std_error: se,
                seed,
                config_digest: run_digest(params, grid, n_paths, seed, &policy.label()),
            },
            paired_mean_diff,
            paired_se,
        });
    }
    Ok(PerturbationStudy { optimal, outcomes })
}

/// How closely the optimal position tracks the zero-friction target
/// `(1 + T - t)(mu - S_t)` on one path, away from the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionlessCheck {
    /// `sup |Phi_t - (1 + T - t)(mu - S_t)|` over `t in [0.1 T, 0.9 T]`.
    pub sup_deviation: f64,
    /// `sup |(1 + T - t)(mu - S_t)|` over the same window.
    pub sup_target: f64,
}

/// Simulates one path under the optimal policy at large depth and measures
/// the deviation from the zero-friction strategy. Requires `delta >= 1e3`
/// (the comparison is meaningless in the frictive regime).
pub fn frictionless_limit_check(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
) -> Result<FrictionlessCheck> {
    params.validate()?;
    check_grid(params, grid)?;
    if params.delta < 1e3 {
        return Err(Error::domain(format!(
            "frictionless check needs delta >= 1e3, got {}",
            params.delta
        )));
    }
    let policy = OptimalPolicy::new(*params)?;
    let path = sample_ou_path(params, grid, seed, 0)?;
    let trace = integrate_strategy(params, &path, &policy)?;
    let horizon = params.horizon;
    let mut sup_deviation = 0f64;
    let mut sup_target = 0f64;
    for k in 0..=grid.n_steps {
        let t = grid.node(k);
        if t < 0.1 * horizon || t > 0.9 * horizon {
            continue;
        }
        let target = (1.0 + horizon - t) * (params.mu - path.prices[k]);
        sup_deviation = sup_deviation.max((trace.positions[k] - target).abs());
        sup_target = sup_target.max(target.abs());
    }
    Ok(FrictionlessCheck {
        sup_deviation,
        sup_target,
    })
}
