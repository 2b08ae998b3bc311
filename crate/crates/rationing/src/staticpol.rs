//! Static (pure threshold) rationing policies.

use serde::Serialize;

use crate::chain::average_profit;
use crate::error::{Error, Result};
use crate::model::{Policy, SystemParams};
use crate::sensitivity::{penalty_roots, SIGN_TOLERANCE};

/// Geometric ratios closer to one than this use direct summation.
pub const RATIO_GUARD: f64 = 1e-9;

/// Threshold policy: reject Class 2 below theta, serve it from theta on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StaticPolicy {
    pub theta: usize,
    pub policy: Policy,
}

pub fn build_static(params: &SystemParams, theta: usize) -> Result<StaticPolicy> {
    let k = params.k();
    if theta < 1 || theta > k + 1 {
        return Err(Error::ThetaOutOfRange { theta, max: k + 1 });
    }
    let decisions = (1..=k).map(|i| u8::from(i >= theta)).collect();
    Ok(StaticPolicy { theta, policy: Policy::new(decisions)? })
}

/// A profit value and, if the geometric closed form could not be used, why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForm {
    pub eta: f64,
    pub fallback: Option<Error>,
}

/// Profit of the threshold policy theta via geometric sums in
/// alpha = lambda/mu1 and beta = lambda/(mu1+mu2).
///
/// States 1..theta-1 weigh alpha^i, states theta..N weigh
/// (alpha/beta)^(theta-1) beta^i. The full state pays C4 rather than C3,
/// which is handled by one correction term on the state-N weight.
pub fn static_profit_closed_form(params: &SystemParams, theta: usize) -> Result<ClosedForm> {
    let sp = build_static(params, theta)?;
    let SystemParams {
        lambda,
        mu1,
        mu2,
        capacity_n: n,
        threshold_k: k,
        c_hold: c1,
        c_lost1,
        c_lost2,
        c_buy: c3,
        c_opp: c4,
        price_r: r,
        penalty_p: p,
    } = *params;
    let alpha = lambda / mu1;
    let beta = lambda / (mu1 + mu2);
    if (alpha - 1.0).abs() < RATIO_GUARD || (beta - 1.0).abs() < RATIO_GUARD {
        return Ok(ClosedForm {
            eta: average_profit(params, &sp.policy)?,
            fallback: Some(Error::DegenerateRatio { alpha, beta }),
        });
    }

    let t = theta as i32;
    let n_i = n as i32;
    let k_i = k as i32;
    let lift = (alpha / beta).powi(t - 1);

    let g1 = c_lost1 * mu1 + c_lost2 * mu2 + c3 * lambda;
    let g2 = r * mu1 - c_lost2 * mu2 - c3 * lambda;
    let g3 = r * (mu1 + mu2) - c3 * lambda;
    let g4 = r * (mu1 + mu2) - c3 * lambda - p * mu2;

    let geo_a = geometric(alpha, 1, t - 1);
    let h = 1.0 + geo_a + lift * geometric(beta, t, n_i - t + 1);

    let low_hold = arith_geometric(alpha, 1, t - 1);
    let high_hold = arith_geometric(beta, t, n_i - t + 1);
    let full_state = lift * beta.powi(n_i) * (c4 - c3) * lambda;

    let s = -g1 + g2 * geo_a - c1 * low_hold - lift * c1 * high_hold
        + lift * g4 * geometric(beta, t, k_i - t + 1)
        + lift * g3 * geometric(beta, k_i + 1, n_i - k_i)
        - full_state;
    Ok(ClosedForm { eta: s / h, fallback: None })
}

/// Within this distance of one the geometric formulas cancel badly
/// (the weighted sum loses about eps / (1 - r)^2), so terms are added directly.
const TERMWISE_BAND: f64 = 1e-2;

/// sum of r^i for i in from..from+count.
fn geometric(r: f64, from: i32, count: i32) -> f64 {
    if count <= 0 {
        0.0
    } else if (1.0 - r).abs() < TERMWISE_BAND {
        (from..from + count).map(|i| r.powi(i)).sum()
    } else {
        r.powi(from) * (1.0 - r.powi(count)) / (1.0 - r)
    }
}

/// sum of i r^i for i in from..from+count.
fn arith_geometric(r: f64, from: i32, count: i32) -> f64 {
    if count <= 0 {
        0.0
    } else if (1.0 - r).abs() < TERMWISE_BAND {
        (from..from + count).map(|i| f64::from(i) * r.powi(i)).sum()
    } else {
        let last = from + count - 1;
        (f64::from(from - 1) * r.powi(from) - f64::from(last) * r.powi(last + 1) + geometric(r, from, count))
            / (1.0 - r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticOptimum {
    pub theta: usize,
    pub eta: f64,
    /// (theta, eta) for every theta in 1..=K+1.
    pub sweep: Vec<(usize, f64)>,
    /// True if any point needed the summation fallback.
    pub fallback_used: bool,
}

/// Best threshold over 1..=K+1; ties go to the smaller theta.
pub fn optimal_static_threshold(params: &SystemParams) -> Result<StaticOptimum> {
    let mut sweep = Vec::with_capacity(params.k() + 1);
    let mut fallback_used = false;
    let mut best: Option<(usize, f64)> = None;
    for theta in 1..=params.k() + 1 {
        let cf = static_profit_closed_form(params, theta)?;
        fallback_used |= cf.fallback.is_some();
        sweep.push((theta, cf.eta));
        match best {
            Some((_, b)) if cf.eta <= b + 1e-12 * b.abs().max(1.0) => {}
            _ => best = Some((theta, cf.eta)),
        }
    }
    let (theta, eta) = best.expect("theta range is never empty");
    Ok(StaticOptimum { theta, eta, sweep, fallback_used })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignCondition {
    /// Threshold of the policy whose factor is used.
    pub policy_theta: usize,
    pub position: usize,
    /// G(position) + b under that policy.
    pub value: f64,
    /// True for "<= 0", false for ">= 0".
    pub non_positive: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem12Report {
    pub theta_star: usize,
    pub conditions: Vec<SignCondition>,
    /// Set when theta* is 1 or K+1 and part of the conditions do not exist.
    pub neighbor_undefined: Option<Error>,
    pub holds: bool,
}

/// Local optimality conditions around the best threshold theta*:
///
/// G^(theta*-1)(theta*-1) + b <= 0, G^(theta*)(theta*-1) + b <= 0,
/// G^(theta*)(theta*) + b >= 0,     G^(theta*+1)(theta*) + b >= 0.
pub fn theorem12_check(params: &SystemParams) -> Result<Theorem12Report> {
    let opt = optimal_static_threshold(params)?;
    theorem12_check_at(params, opt.theta)
}

/// Same conditions around an arbitrary threshold.
pub fn theorem12_check_at(params: &SystemParams, theta: usize) -> Result<Theorem12Report> {
    let k = params.k();
    build_static(params, theta)?;
    let p = params.penalty_p;
    let mut conditions = Vec::new();
    let mut check = |policy_theta: usize, position: usize, non_positive: bool| -> Result<()> {
        let sp = build_static(params, policy_theta)?;
        let prof = penalty_roots(params, &sp.policy)?;
        let value = prof.shifted_at(position, p);
        let scale = prof.const_terms[position - 1].abs().max((p * prof.coefficients[position - 1]).abs()).max(1.0);
        let tol = SIGN_TOLERANCE * scale;
        let holds = if non_positive { value <= tol } else { value >= -tol };
        conditions.push(SignCondition { policy_theta, position, value, non_positive, holds });
        Ok(())
    };
    if theta >= 2 {
        check(theta - 1, theta - 1, true)?;
        check(theta, theta - 1, true)?;
    }
    if theta <= k {
        check(theta, theta, false)?;
        check(theta + 1, theta, false)?;
    }
    let neighbor_undefined = if theta == 1 || theta == k + 1 { Some(Error::NeighborUndefined { theta }) } else { None };
    Ok(Theorem12Report { theta_star: theta, holds: conditions.iter().all(|c| c.holds), conditions, neighbor_undefined })
}
