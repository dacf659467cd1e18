//! The four batch commands. Each returns a serializable report plus a pass
//! flag; writing happens in `main` only after the whole computation
//! succeeded, so a failed run never leaves partial output.

use std::fs;
use std::io::Write as _;

use serde::Serialize;

use ou_impact::analytic::{analytic_value, certainty_equivalent, ValueShape};
use ou_impact::simulation::{
    frictionless_limit_check, integrate_strategy, monte_carlo_value, perturbation_study,
    sample_ou_path, MonteCarloReport, OptimalPolicy, Policy, TimeGrid, ZeroPolicy,
};
use ou_impact::variational::{
    coupled_min_value, coupled_optimizer_integral, coupled_oracle, dual_value, endpoint_min_value,
    endpoint_oracle, EndpointProblem, TerminalCoupledProblem,
};
use ou_impact::ModelParams;

use crate::config::{
    CoupledCase, EndpointCase, LimitsConfig, MonteCarloConfig, OraclesConfig, PolicyCfg,
    ValueConfig,
};
use crate::CliError;

/// Tolerances the reports check themselves against.
const DUALITY_GAP_TOL: f64 = 1e-8;
const ORACLE_ENDPOINT_RELTOL: f64 = 1e-5;
const ORACLE_COUPLED_RELTOL: f64 = 1e-3;
const ORACLE_DECAY_RATIO: f64 = 0.3;
const MC_DISCRETIZATION_ALLOWANCE: f64 = 2e-3;

#[derive(Debug, Serialize)]
pub struct ValueReport {
    pub config_digest: String,
    #[serde(rename = "V_of_T")]
    pub v_of_t: f64,
    #[serde(rename = "integral_V")]
    pub integral_v: f64,
    pub analytic_value: f64,
    pub certainty_equivalent: f64,
    pub dual_value: f64,
    /// `dual_value + log(-analytic_value)`; zero up to quadrature error.
    pub duality_gap: f64,
    pub pass: bool,
}

pub fn cmd_value(cfg: &ValueConfig, digest: String) -> Result<ValueReport, CliError> {
    if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
        return Err(CliError::Validation(format!(
            "tol: must be > 0, got {}",
            cfg.tol
        )));
    }
    let params = cfg.model.to_params()?;
    if params.phi0 != 0.0 {
        return Err(CliError::Validation(
            "model.phi0: the closed-form value requires phi0 = 0".to_string(),
        ));
    }
    let shape = ValueShape::new(params.delta).map_err(CliError::internal)?;
    let v_of_t = shape.value(params.horizon).map_err(CliError::internal)?;
    let integral_v = shape
        .integral(params.horizon, cfg.tol)
        .map_err(CliError::internal)?;
    let value = analytic_value(&params, cfg.tol).map_err(CliError::internal)?;
    let ce = certainty_equivalent(&params, cfg.tol).map_err(CliError::internal)?;
    let dual = dual_value(&params, cfg.tol).map_err(CliError::internal)?;
    let gap = dual + (-value).ln();
    Ok(ValueReport {
        config_digest: digest,
        v_of_t,
        integral_v,
        analytic_value: value,
        certainty_equivalent: ce,
        dual_value: dual,
        duality_gap: gap,
        pass: gap.abs() <= DUALITY_GAP_TOL,
    })
}

#[derive(Debug, Serialize)]
pub struct PerturbationRow {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub paired_mean_diff: f64,
    pub paired_se: f64,
    /// True when the perturbation does not beat the optimum by more than
    /// 3 paired standard errors.
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct MonteCarloCmdReport {
    pub config_digest: String,
    pub seed: u64,
    pub policy: PolicyCfg,
    pub report: MonteCarloReport,
    /// Closed-form comparison, present for the optimal policy with phi0 = 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<PerturbationRow>,
    pub pass: bool,
}

pub fn cmd_montecarlo(
    cfg: &MonteCarloConfig,
    digest: String,
    trace_path: Option<&str>,
) -> Result<MonteCarloCmdReport, CliError> {
    let params = cfg.model.to_params()?;
    if cfg.n_paths < 2 {
        return Err(CliError::Validation(format!(
            "n_paths: must be >= 2, got {}",
            cfg.n_paths
        )));
    }
    if cfg.n_steps == 0 {
        return Err(CliError::Validation("n_steps: must be >= 1".to_string()));
    }
    let grid = TimeGrid::new(0.0, params.horizon, cfg.n_steps)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let report = match cfg.policy {
        PolicyCfg::Optimal => {
            let policy = OptimalPolicy::new(params).map_err(CliError::internal)?;
            monte_carlo_value(&params, &grid, cfg.n_paths, cfg.seed, &policy)
        }
        PolicyCfg::Zero => monte_carlo_value(&params, &grid, cfg.n_paths, cfg.seed, &ZeroPolicy),
    }
    .map_err(CliError::internal)?;

    let (analytic, abs_error, tolerance) = if cfg.policy == PolicyCfg::Optimal && params.phi0 == 0.0
    {
        let exact = analytic_value(&params, cfg.tol).map_err(CliError::internal)?;
        let err = (report.estimate - exact).abs();
        let tol = 3.0 * report.std_error + MC_DISCRETIZATION_ALLOWANCE;
        (Some(exact), Some(err), Some(tol))
    } else {
        (None, None, None)
    };

    let mut rows = Vec::new();
    if !cfg.perturbations.is_empty() {
        if cfg.policy != PolicyCfg::Optimal {
            return Err(CliError::Validation(
                "perturbations: only meaningful for the optimal policy".to_string(),
            ));
        }
        let kinds = cfg
            .perturbations
            .iter()
            .map(|p| p.to_perturbation())
            .collect::<Result<Vec<_>, _>>()?;
        let study = perturbation_study(&params, &grid, cfg.n_paths, cfg.seed, &kinds)
            .map_err(CliError::internal)?;
        for o in &study.outcomes {
            rows.push(PerturbationRow {
                label: o.label.clone(),
                estimate: o.report.estimate,
                std_error: o.report.std_error,
                paired_mean_diff: o.paired_mean_diff,
                paired_se: o.paired_se,
                pass: o.paired_mean_diff <= 3.0 * o.paired_se,
            });
        }
    }

    if let Some(path) = &cfg.per_path_csv {
        write_per_path_csv(path, &params, &grid, cfg)?;
    }
    if let Some(path) = trace_path {
        write_trace_csv(path, &params, &grid, cfg)?;
    }

    let mut pass = rows.iter().all(|r| r.pass);
    if let (Some(err), Some(tol)) = (abs_error, tolerance) {
        pass = pass && err <= tol;
    }
    Ok(MonteCarloCmdReport {
        config_digest: digest,
        seed: cfg.seed,
        policy: cfg.policy,
        report,
        analytic_value: analytic,
        abs_error,
        tolerance,
        perturbations: rows,
        pass,
    })
}

fn policy_for(cfg: &MonteCarloConfig, params: &ModelParams) -> Result<Box<dyn Policy>, CliError> {
    Ok(match cfg.policy {
        PolicyCfg::Optimal => Box::new(OptimalPolicy::new(*params).map_err(CliError::internal)?),
        PolicyCfg::Zero => Box::new(ZeroPolicy),
    })
}

fn write_per_path_csv(
    path: &str,
    params: &ModelParams,
    grid: &TimeGrid,
    cfg: &MonteCarloConfig,
) -> Result<(), CliError> {
    let policy = policy_for(cfg, params)?;
    let mut out = String::from("path_index,terminal_wealth,utility\n");
    for i in 0..cfg.n_paths {
        let sample = sample_ou_path(params, grid, cfg.seed, i).map_err(CliError::internal)?;
        let trace =
            integrate_strategy(params, &sample, policy.as_ref()).map_err(CliError::internal)?;
        let w = trace.wealth_ito;
        out.push_str(&format!("{i},{w},{}\n", -(-w).exp()));
    }
    write_file(path, out.as_bytes())
}

fn write_trace_csv(
    path: &str,
    params: &ModelParams,
    grid: &TimeGrid,
    cfg: &MonteCarloConfig,
) -> Result<(), CliError> {
    if cfg.trace_path_index >= cfg.n_paths {
        return Err(CliError::Validation(format!(
            "trace_path_index: {} out of range for n_paths {}",
            cfg.trace_path_index, cfg.n_paths
        )));
    }
    let policy = policy_for(cfg, params)?;
    let sample =
        sample_ou_path(params, grid, cfg.seed, cfg.trace_path_index).map_err(CliError::internal)?;
    let trace = integrate_strategy(params, &sample, policy.as_ref()).map_err(CliError::internal)?;
    let mut out = String::from("t,S,phi,Phi\n");
    for k in 0..=grid.n_steps {
        out.push_str(&format!(
            "{},{},{},{}\n",
            grid.node(k),
            sample.prices[k],
            trace.rates[k],
            trace.positions[k]
        ));
    }
    write_file(path, out.as_bytes())
}

fn write_file(path: &str, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path)
        .map_err(|e| CliError::Validation(format!("cannot write {path}: {e}")))?;
    f.write_all(bytes)
        .map_err(|e| CliError::Internal(format!("writing {path}: {e}")))
}

#[derive(Debug, Serialize)]
pub struct EndpointRow {
    pub alpha: f64,
    pub s: f64,
    pub t_end: f64,
    pub x: f64,
    pub y: f64,
    pub closed_form: f64,
    pub discrete_objective: f64,
    pub rel_error: f64,
    /// Error decay per grid doubling (n/2 -> n); absent for n < 4.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_ratio: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct CoupledRow {
    pub delta: f64,
    pub s: f64,
    pub t_end: f64,
    pub theta: f64,
    pub phi0: f64,
    pub integral_closed_form: f64,
    pub integral_discrete: f64,
    pub integral_rel_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_closed_form: Option<f64>,
    pub objective_discrete: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_rel_error: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct OraclesReport {
    pub config_digest: String,
    pub n: usize,
    pub endpoint: Vec<EndpointRow>,
    pub coupled: Vec<CoupledRow>,
    pub pass: bool,
}

pub fn cmd_oracles(cfg: &OraclesConfig, digest: String) -> Result<OraclesReport, CliError> {
    if cfg.n < 2 {
        return Err(CliError::Validation(format!(
            "n: must be >= 2, got {}",
            cfg.n
        )));
    }
    let mut endpoint = Vec::new();
    for case in cfg.endpoint_grid() {
        endpoint.push(run_endpoint_case(&case, cfg.n)?);
    }
    let mut coupled = Vec::new();
    for case in cfg.coupled_grid() {
        coupled.push(run_coupled_case(&case, cfg.n)?);
    }
    let pass = endpoint.iter().all(|r| r.pass) && coupled.iter().all(|r| r.pass);
    Ok(OraclesReport {
        config_digest: digest,
        n: cfg.n,
        endpoint,
        coupled,
        pass,
    })
}

fn run_endpoint_case(case: &EndpointCase, n: usize) -> Result<EndpointRow, CliError> {
    let p = EndpointProblem::new(case.s, case.t_end, case.alpha, case.x, case.y)
        .map_err(|e| CliError::Validation(format!("endpoint_cases[]: {e}")))?;
    let cf = endpoint_min_value(&p).map_err(CliError::internal)?;
    let sol = endpoint_oracle(&p, n).map_err(CliError::internal)?;
    let rel_error = (sol.objective - cf).abs() / (1.0 + cf.abs());
    let decay_ratio = if n >= 4 {
        let half = endpoint_oracle(&p, n / 2).map_err(CliError::internal)?;
        let err_half = (half.objective - cf).abs();
        let err_full = (sol.objective - cf).abs();
        (err_half > 1e-13).then(|| err_full / err_half)
    } else {
        None
    };
    let mut pass = rel_error <= ORACLE_ENDPOINT_RELTOL;
    if let Some(r) = decay_ratio {
        pass = pass && r <= ORACLE_DECAY_RATIO;
    }
    Ok(EndpointRow {
        alpha: case.alpha,
        s: case.s,
        t_end: case.t_end,
        x: case.x,
        y: case.y,
        closed_form: cf,
        discrete_objective: sol.objective,
        rel_error,
        decay_ratio,
        pass,
    })
}

fn run_coupled_case(case: &CoupledCase, n: usize) -> Result<CoupledRow, CliError> {
    let p = TerminalCoupledProblem::new(case.s, case.t_end, case.theta, case.phi0, case.delta)
        .map_err(|e| CliError::Validation(format!("coupled_cases[]: {e}")))?;
    let cf_int = coupled_optimizer_integral(&p).map_err(CliError::internal)?;
    let sol = coupled_oracle(&p, n).map_err(CliError::internal)?;
    let integral_rel_error = (sol.integral - cf_int).abs() / cf_int.abs().max(1e-12);
    let (obj_cf, obj_rel) = if case.phi0 == 0.0 {
        let cf = coupled_min_value(&p).map_err(CliError::internal)?;
        let rel = (sol.objective - cf).abs() / cf.abs().max(1e-12);
        (Some(cf), Some(rel))
    } else {
        (None, None)
    };
    let pass = integral_rel_error <= ORACLE_COUPLED_RELTOL
        && obj_rel.is_none_or(|r| r <= ORACLE_COUPLED_RELTOL);
    Ok(CoupledRow {
        delta: case.delta,
        s: case.s,
        t_end: case.t_end,
        theta: case.theta,
        phi0: case.phi0,
        integral_closed_form: cf_int,
        integral_discrete: sol.integral,
        integral_rel_error,
        objective_closed_form: obj_cf,
        objective_discrete: sol.objective,
        objective_rel_error: obj_rel,
        pass,
    })
}

#[derive(Debug, Serialize)]
pub struct AsymptoticsReport {
    pub delta: f64,
    pub horizon: f64,
    /// `c(T)/T` computed from the closed form.
    pub certainty_equivalent_rate: f64,
    /// `-(sqrt(1+delta)-1)/2`, the rate the value formula implies.
    pub formula_limit: f64,
    /// `1 - sqrt(1+delta)`, the rate quoted in prose; emitted for
    /// comparison, not asserted.
    pub prose_limit: f64,
    /// `(1/T) \int_0^T V`.
    pub cesaro_mean: f64,
    /// `sqrt(1+delta) - 1`.
    pub value_limit: f64,
    pub t_large: f64,
    pub v_residual_at_t_large: f64,
}

#[derive(Debug, Serialize)]
pub struct FrictionlessRow {
    pub delta: f64,
    pub sup_deviation: f64,
    pub sup_target: f64,
    pub ratio: f64,
    pub within_max_ratio: bool,
}

#[derive(Debug, Serialize)]
pub struct LimitsReport {
    pub config_digest: String,
    pub seed: u64,
    pub asymptotics: AsymptoticsReport,
    pub frictionless: Vec<FrictionlessRow>,
    /// Deviations shrink as depth grows.
    pub monotone_in_depth: bool,
    pub pass: bool,
}

pub fn cmd_limits(cfg: &LimitsConfig, digest: String) -> Result<LimitsReport, CliError> {
    let a = &cfg.asymptotics;
    if !(a.delta.is_finite() && a.delta > 0.0) {
        return Err(CliError::Validation(format!(
            "asymptotics.delta: must be > 0, got {}",
            a.delta
        )));
    }
    if !(a.horizon.is_finite() && a.horizon > 0.0) {
        return Err(CliError::Validation(format!(
            "asymptotics.horizon: must be > 0, got {}",
            a.horizon
        )));
    }
    let params = ModelParams::new(0.0, 0.0, a.delta, a.horizon, 0.0)
        .map_err(|e| CliError::Validation(format!("asymptotics: {e}")))?;
    let ce_rate = certainty_equivalent(&params, a.tol).map_err(CliError::internal)? / a.horizon;
    let shape = ValueShape::new(a.delta).map_err(CliError::internal)?;
    let cesaro = shape
        .integral(a.horizon, a.tol)
        .map_err(CliError::internal)?
        / a.horizon;
    let t_large = 2e7 * a.delta;
    let residual = shape.limit() - shape.value(t_large).map_err(CliError::internal)?;
    let asymptotics = AsymptoticsReport {
        delta: a.delta,
        horizon: a.horizon,
        certainty_equivalent_rate: ce_rate,
        formula_limit: -0.5 * shape.limit(),
        prose_limit: -shape.limit(),
        cesaro_mean: cesaro,
        value_limit: shape.limit(),
        t_large,
        v_residual_at_t_large: residual,
    };

    let f = &cfg.frictionless;
    if f.deltas.is_empty() {
        return Err(CliError::Validation(
            "frictionless.deltas: need at least one depth".to_string(),
        ));
    }
    let mut rows = Vec::new();
    for &delta in &f.deltas {
        if !(delta.is_finite() && delta >= 1e3) {
            return Err(CliError::Validation(format!(
                "frictionless.deltas[]: each depth must be >= 1e3, got {delta}"
            )));
        }
        let params = ModelParams::new(f.mu, f.s0, delta, f.horizon, 0.0)
            .map_err(|e| CliError::Validation(format!("frictionless: {e}")))?;
        let grid = TimeGrid::new(0.0, f.horizon, f.n_steps)
            .map_err(|e| CliError::Validation(format!("frictionless: {e}")))?;
        let check = frictionless_limit_check(&params, &grid, f.seed).map_err(CliError::internal)?;
        let ratio = check.sup_deviation / check.sup_target;
        rows.push(FrictionlessRow {
            delta,
            sup_deviation: check.sup_deviation,
            sup_target: check.sup_target,
            ratio,
            within_max_ratio: ratio <= f.max_ratio,
        });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].sup_deviation < w[0].sup_deviation);
    // the ratio bound applies at the deepest market; shallower depths are
    // monotonicity comparators
    let pass = rows.last().is_some_and(|r| r.within_max_ratio) && monotone;
    Ok(LimitsReport {
        config_digest: digest,
        seed: f.seed,
        asymptotics,
        frictionless: rows,
        monotone_in_depth: monotone,
        pass,
    })
}
