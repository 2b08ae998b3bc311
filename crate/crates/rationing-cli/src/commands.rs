//! The solve, optimize, sweep and simulate subcommands.

use serde_json::json;

use rationing::chain::{average_profit, profit_linear_form, stationary_distribution};
use rationing::model::ENUMERATION_CAP;
use rationing::optimizer::{global_optimal_with, OptimizeOptions, DEFAULT_ORACLE_LIMIT};
use rationing::poisson::{realization_factors_recurrence, solve_poisson};
use rationing::sensitivity::penalty_roots;
use rationing::sim::{simulate as run_simulation, SimConfig};
use rationing::staticpol::{build_static, optimal_static_threshold, static_profit_closed_form};
use rationing::{Error, Policy, SystemParams};

use crate::config::{Grid, RunConfig, SweepKind};
use crate::error::{CliError, CliResult};
use crate::output::{num, Outcome, Table};

fn require_policy(cfg: &RunConfig, flag: Option<Policy>) -> CliResult<Policy> {
    flag.or_else(|| cfg.policy.clone())
        .ok_or_else(|| CliError::usage("a policy is required: pass --policy or set \"policy\" in the config"))
}

/// pi, eta, (D, F), the potential g, the realization factors and the
/// penalty profile of one policy.
pub fn solve(cfg: &RunConfig, policy: Option<Policy>, im: f64, xi: f64) -> CliResult<Outcome> {
    let (params, warnings) = cfg.validated()?;
    let policy = require_policy(cfg, policy)?;
    params.check_policy(&policy)?;

    let st = stationary_distribution(&params, &policy)?;
    let lf = profit_linear_form(&params, &policy)?;
    let sol = solve_poisson(&params, &policy, im, xi)?;
    let rf = realization_factors_recurrence(&params, &policy, sol.eta)?;
    let prof = penalty_roots(&params, &policy)?;

    let ranks = prof.ranks();
    let mut table = Table::new(["i", "root", "sorted_rank"]);
    for (i, root) in prof.roots.iter().enumerate() {
        table.push(vec![(i + 1).to_string(), num(*root), ranks[i].to_string()]);
    }
    let json = json!({
        "command": "solve",
        "params": params,
        "warnings": warnings,
        "policy": policy,
        "policy_display": policy.to_string(),
        "pi": st.pi,
        "eta": sol.eta,
        "d_coef": lf.d_coef,
        "f_coef": lf.f_coef,
        "g": sol.g,
        "free_im": sol.free_im,
        "free_xi": sol.free_xi,
        "residual": sol.residual,
        "realization_factors": rf.g_diff,
        "offset_b": rf.offset_b,
        "penalty_profile": {
            "roots": prof.roots,
            "sort_perm": prof.sort_perm,
            "ranks": ranks,
            "p_high": prof.p_high,
            "p_low": prof.p_low,
            "degenerate": prof.degenerate,
        },
    });
    Ok(Outcome { json, table: Some(table), passed: true })
}

/// Globally optimal policy; `force_oracle` enumerates all 2^K policies up
/// to the enumeration cap instead of the default limit.
pub fn optimize(cfg: &RunConfig, force_oracle: bool) -> CliResult<Outcome> {
    let (params, warnings) = cfg.validated()?;
    let k = params.k();
    if force_oracle && k > ENUMERATION_CAP {
        return Err(Error::CapExceeded { k, cap: ENUMERATION_CAP }.into());
    }
    let opts = OptimizeOptions { oracle_limit: if force_oracle { ENUMERATION_CAP } else { DEFAULT_ORACLE_LIMIT } };
    let rep = global_optimal_with(&params, &opts)?;
    let ties: Vec<String> =
        rep.oracle.as_ref().map(|bf| bf.ties.iter().map(ToString::to_string).collect()).unwrap_or_default();
    let mut table = Table::new(["i", "decision"]);
    for (i, d) in rep.policy.as_slice().iter().enumerate() {
        table.push(vec![(i + 1).to_string(), d.to_string()]);
    }
    let json = json!({
        "command": "optimize",
        "params": params,
        "warnings": warnings,
        "policy": rep.policy,
        "policy_display": rep.policy.to_string(),
        "eta": rep.eta,
        "region": rep.region,
        "n0": rep.n0,
        "sort_perm": rep.sort_perm,
        "oracle_confirmed": rep.oracle_confirmed,
        "oracle_eta": rep.oracle.as_ref().map(|bf| bf.eta),
        "oracle_evaluated": rep.oracle.as_ref().map(|bf| bf.evaluated),
        "ties": ties,
        "tie": ties.len() > 1,
        "iterations": rep.iterations,
        "diagnostics": rep.diagnostics,
    });
    Ok(Outcome { json, table: Some(table), passed: rep.oracle_confirmed != Some(false) })
}

/// Grid points from explicit values, a grid, or the default for the kind.
fn sweep_points(params: &SystemParams, kind: SweepKind, grid: Option<Grid>, values: Vec<f64>) -> Vec<f64> {
    if !values.is_empty() {
        return values;
    }
    match (grid, kind) {
        (Some(g), _) => g.points(),
        (None, SweepKind::Theta) => (1..=params.k() + 1).map(|t| t as f64).collect(),
        (None, _) => Vec::new(),
    }
}

/// One row per grid point: (grid_value, eta[, theta_star]).
///
/// Theta sweeps evaluate static policies. Lambda and penalty sweeps evaluate
/// the given policy, or the best static policy (reported as theta_star) when
/// none is given.
pub fn sweep(
    cfg: &RunConfig,
    kind: Option<SweepKind>,
    grid: Option<Grid>,
    values: Vec<f64>,
    policy: Option<Policy>,
) -> CliResult<Outcome> {
    let (params, warnings) = cfg.validated()?;
    let spec = cfg.sweep.clone();
    let kind = kind
        .or(spec.as_ref().map(|s| s.kind))
        .ok_or_else(|| CliError::usage("sweep kind is required: --kind theta|lambda|penalty"))?;
    let grid = grid.or(spec.as_ref().and_then(|s| s.grid));
    let values = if values.is_empty() { spec.map(|s| s.values).unwrap_or_default() } else { values };
    let points = sweep_points(&params, kind, grid, values);
    if points.is_empty() {
        return Err(Error::EmptyGrid.into());
    }
    let policy = policy.or_else(|| cfg.policy.clone());
    if let Some(d) = &policy {
        params.check_policy(d)?;
    }

    let with_theta = kind != SweepKind::Theta && policy.is_none();
    let mut table =
        if with_theta { Table::new(["grid_value", "eta", "theta_star"]) } else { Table::new(["grid_value", "eta"]) };
    let mut rows = Vec::with_capacity(points.len());
    for &x in &points {
        let (eta, theta_star) = match kind {
            SweepKind::Theta => {
                if x.fract() != 0.0 || x < 1.0 {
                    return Err(CliError::usage(format!("theta must be a positive integer, got {x}")));
                }
                (static_profit_closed_form(&params, x as usize)?.eta, None)
            }
            SweepKind::Lambda | SweepKind::Penalty => {
                let mut p = params;
                if kind == SweepKind::Lambda {
                    p.lambda = x;
                } else {
                    p.penalty_p = x;
                }
                let p = rationing::model::validate_params(p)?.params;
                match &policy {
                    Some(d) => (average_profit(&p, d)?, None),
                    None => {
                        let opt = optimal_static_threshold(&p)?;
                        (opt.eta, Some(opt.theta))
                    }
                }
            }
        };
        let mut row = vec![num(x), num(eta)];
        if let Some(t) = theta_star {
            row.push(t.to_string());
        }
        table.push(row);
        rows.push(json!({ "grid_value": x, "eta": eta, "theta_star": theta_star }));
    }
    let best = rows.iter().max_by(|a, b| a["eta"].as_f64().unwrap().total_cmp(&b["eta"].as_f64().unwrap())).cloned();
    let json = json!({
        "command": "sweep",
        "kind": kind,
        "params": params,
        "warnings": warnings,
        "policy": policy,
        "rows": rows,
        "argmax": best,
    });
    Ok(Outcome { json, table: Some(table), passed: true })
}

/// Overrides for the simulation block of the config.
#[derive(Debug, Clone, Default)]
pub struct SimOverrides {
    pub horizon: Option<f64>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub warmup_fraction: Option<f64>,
}

/// Simulation estimate and its z-score against the analytic profit; the
/// check passes when |z| <= 3.
pub fn simulate(cfg: &RunConfig, policy: Option<Policy>, ov: &SimOverrides) -> CliResult<Outcome> {
    let (params, warnings) = cfg.validated()?;
    let policy = require_policy(cfg, policy)?;
    params.check_policy(&policy)?;
    let spec = cfg.simulation.as_ref();
    let horizon =
        ov.horizon.or(spec.map(|s| s.horizon)).ok_or_else(|| CliError::usage("simulation horizon is required"))?;
    let replications = ov
        .replications
        .or(spec.map(|s| s.replications))
        .ok_or_else(|| CliError::usage("number of replications is required"))?;
    if replications < 2 {
        return Err(CliError::usage(format!(
            "at least 2 replications are needed for a standard error, got {replications}"
        )));
    }
    let seed = ov.seed.or(spec.map(|s| s.seed)).unwrap_or(0);
    let mut sc = SimConfig::new(horizon, replications, seed);
    if let Some(w) = ov.warmup_fraction.or(spec.map(|s| s.warmup_fraction)) {
        sc.warmup_fraction = w;
    }
    let est = run_simulation(&params, &policy, &sc).map_err(|e| match e {
        Error::InvalidArgument(m) => CliError::usage(m),
        other => other.into(),
    })?;
    let eta = average_profit(&params, &policy)?;
    let z = if est.std_err > 0.0 {
        (est.eta_hat - eta) / est.std_err
    } else if (est.eta_hat - eta).abs() <= 1e-12 * eta.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY
    };
    let within = z.abs() <= 3.0;
    let mut table = Table::new(["rep", "eta_hat_rep"]);
    for (r, x) in est.per_replication.iter().enumerate() {
        table.push(vec![r.to_string(), num(*x)]);
    }
    let json = json!({
        "command": "simulate",
        "params": params,
        "warnings": warnings,
        "policy": policy,
        "warmup_fraction": sc.warmup_fraction,
        "estimate": est,
        "eta": eta,
        "z": z,
        "within_3_std_err": within,
    });
    Ok(Outcome { json, table: Some(table), passed: within })
}

/// Static policy helper shared with the reproduction harness.
pub fn static_policy(params: &SystemParams, theta: usize) -> CliResult<Policy> {
    Ok(build_static(params, theta)?.policy)
}
