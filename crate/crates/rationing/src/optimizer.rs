//! Optimal dynamic rationing: region gates, transformational threshold
//! policies, policy improvement and the exhaustive oracle.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::average_profit;
use crate::error::{Error, Result};
use crate::model::{enumerate_policies_with_cap, Policy, SystemParams, ENUMERATION_CAP};
use crate::sensitivity::{penalty_roots, region_of, sign_labels, PenaltyProfile, Region, Sign};
use crate::staticpol::{build_static, optimal_static_threshold};

/// Band within which two profits are treated as equal.
pub const TIE_BAND: f64 = 1e-12;

/// By default the oracle only confirms results up to this K.
pub const DEFAULT_ORACLE_LIMIT: usize = 16;

const MAX_IMPROVEMENT_STEPS: usize = 10_000;

fn tie_band(eta: f64) -> f64 {
    TIE_BAND * eta.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionClassification {
    pub region: Region,
    pub reference: Policy,
    pub p_low: f64,
    pub p_high: f64,
    /// Number of penalty roots strictly below P; set in the middle region.
    pub n0: Option<usize>,
}

pub fn classify_region(params: &SystemParams, policy: &Policy) -> Result<RegionClassification> {
    let prof = penalty_roots(params, policy)?;
    Ok(classification_from(&prof, policy, params.penalty_p))
}

fn classification_from(prof: &PenaltyProfile, policy: &Policy, p: f64) -> RegionClassification {
    let region = region_of(prof, p);
    RegionClassification {
        region,
        reference: policy.clone(),
        p_low: prof.p_low,
        p_high: prof.p_high,
        n0: (region == Region::Middle).then(|| prof.count_below(p)),
    }
}

pub fn optimal_high_penalty(params: &SystemParams) -> Policy {
    Policy::zeros(params.k())
}

pub fn optimal_low_penalty(params: &SystemParams) -> Policy {
    Policy::ones(params.k())
}

/// Profit of the all-zeros policy from its geometric closed form.
pub fn closed_form_profit_high(params: &SystemParams) -> Result<crate::staticpol::ClosedForm> {
    crate::staticpol::static_profit_closed_form(params, params.k() + 1)
}

/// Profit of the all-ones policy; only beta-sums appear.
pub fn closed_form_profit_low(params: &SystemParams) -> Result<crate::staticpol::ClosedForm> {
    crate::staticpol::static_profit_closed_form(params, 1)
}

/// Coordinates sorted by penalty root and the threshold policy over them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransformPlan {
    /// (i_1, ..., i_K), 1-based, ascending in the root.
    pub sort_perm: Vec<usize>,
    pub n0: usize,
    /// Threshold policy in sorted coordinates: n0 zeros, then ones.
    pub transformed: Policy,
}

impl TransformPlan {
    /// Place roots and P: positions whose root is strictly below P reject
    /// Class 2, the rest (ties included) serve it.
    pub fn from_roots(roots: &[f64], p: f64) -> Self {
        let k = roots.len();
        let mut sort_perm: Vec<usize> = (1..=k).collect();
        sort_perm.sort_by(|&x, &y| roots[x - 1].total_cmp(&roots[y - 1]));
        let n0 = roots.iter().filter(|&&r| r < p).count();
        let transformed = Policy::new((0..k).map(|j| u8::from(j >= n0)).collect()).expect("binary");
        Self { sort_perm, n0, transformed }
    }

    /// Map the sorted-coordinate policy back to original positions.
    pub fn restore(&self) -> Policy {
        restore_from_sorted(&self.sort_perm, &self.transformed)
    }
}

/// transformed[j] = policy[perm[j]].
pub fn transform_to_sorted(perm: &[usize], policy: &Policy) -> Policy {
    Policy::new(perm.iter().map(|&i| policy.decision(i)).collect()).expect("binary")
}

/// Inverse of [`transform_to_sorted`].
pub fn restore_from_sorted(perm: &[usize], transformed: &Policy) -> Policy {
    let mut out = vec![0u8; perm.len()];
    for (j, &i) in perm.iter().enumerate() {
        out[i - 1] = transformed.as_slice()[j];
    }
    Policy::new(out).expect("binary")
}

pub fn transform_plan(params: &SystemParams, policy: &Policy) -> Result<TransformPlan> {
    let prof = penalty_roots(params, policy)?;
    Ok(TransformPlan::from_roots(&prof.roots, params.penalty_p))
}

/// Exhaustive argmax over all 2^K policies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForce {
    pub policy: Policy,
    pub eta: f64,
    /// Every policy within the tie band of the maximum (at most 64 listed).
    pub ties: Vec<Policy>,
    pub evaluated: u64,
}

pub fn brute_force_optimal(params: &SystemParams) -> Result<BruteForce> {
    brute_force_with_cap(params, ENUMERATION_CAP)
}

pub fn brute_force_with_cap(params: &SystemParams, cap: usize) -> Result<BruteForce> {
    let k = params.k();
    let total = enumerate_policies_with_cap(k, cap)?.total();
    let eval = |idx: u64| average_profit(params, &Policy::from_index(k, idx));

    let best = (0..total).into_par_iter().map(eval).try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))?;
    let band = tie_band(best);
    // ties resolve toward the lexicographically smallest decision vector
    let mut ties: Vec<u64> =
        (0..total).into_par_iter().filter(|&idx| matches!(eval(idx), Ok(e) if e >= best - band)).collect();
    ties.sort_unstable();
    let first = ties[0];
    Ok(BruteForce {
        policy: Policy::from_index(k, first),
        eta: eval(first)?,
        ties: ties.iter().take(64).map(|&i| Policy::from_index(k, i)).collect(),
        evaluated: total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeOptions {
    /// Run the oracle whenever K is at most this.
    pub oracle_limit: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { oracle_limit: DEFAULT_ORACLE_LIMIT }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerReport {
    pub policy: Policy,
    pub eta: f64,
    pub region: Region,
    pub n0: Option<usize>,
    pub sort_perm: Vec<usize>,
    /// None when the oracle did not run.
    pub oracle_confirmed: Option<bool>,
    /// Oracle result, when it ran.
    pub oracle: Option<BruteForce>,
    pub iterations: usize,
    pub diagnostics: Vec<String>,
}

/// One improvement step: reject Class 2 exactly where G(i) + b < 0.
///
/// With positive P-coefficients this is the inverse transform of the
/// threshold policy over the sorted roots.
fn improve(prof: &PenaltyProfile, p: f64) -> Policy {
    let decisions = sign_labels(prof, p).into_iter().map(|s| u8::from(s != Sign::Negative)).collect();
    Policy::new(decisions).expect("binary")
}

struct Search {
    best: Option<(Policy, f64)>,
    iterations: usize,
    cycled: bool,
}

impl Search {
    fn offer(&mut self, policy: &Policy, eta: f64) {
        let replace = match &self.best {
            None => true,
            Some((bp, be)) => eta > be + tie_band(*be) || ((eta - be).abs() <= tie_band(*be) && policy < bp),
        };
        if replace {
            self.best = Some((policy.clone(), eta));
        }
    }

    fn run_from(&mut self, params: &SystemParams, seed: Policy) -> Result<()> {
        let p = params.penalty_p;
        let mut cur = seed;
        let mut seen = HashSet::new();
        seen.insert(cur.clone());
        for _ in 0..MAX_IMPROVEMENT_STEPS {
            self.iterations += 1;
            let eta = average_profit(params, &cur)?;
            self.offer(&cur, eta);
            let prof = penalty_roots(params, &cur)?;
            let next = improve(&prof, p);
            if next == cur {
                return Ok(());
            }
            if !seen.insert(next.clone()) {
                let eta_next = average_profit(params, &next)?;
                self.offer(&next, eta_next);
                self.cycled = true;
                return Ok(());
            }
            cur = next;
        }
        self.cycled = true;
        Ok(())
    }
}

pub fn global_optimal(params: &SystemParams) -> Result<OptimizerReport> {
    global_optimal_with(params, &OptimizeOptions::default())
}

/// (1) all-zeros when P >= P_H(all-zeros); (2) all-ones when
/// 0 < P <= P_L(all-ones); (3) otherwise improve transformational threshold
/// policies from the all-zeros, all-ones and best-static seeds until they
/// stop moving, and keep the best.
pub fn global_optimal_with(params: &SystemParams, opts: &OptimizeOptions) -> Result<OptimizerReport> {
    let k = params.k();
    let p = params.penalty_p;
    let zeros = Policy::zeros(k);
    let ones = Policy::ones(k);
    let prof_zeros = penalty_roots(params, &zeros)?;
    let prof_ones = penalty_roots(params, &ones)?;
    let mut diagnostics = Vec::new();

    let (policy, region, prof, iterations) = if p >= prof_zeros.p_high {
        (zeros, Region::HighPenalty, prof_zeros, 0)
    } else if prof_ones.p_low > 0.0 && p <= prof_ones.p_low {
        (ones, Region::LowPenalty, prof_ones, 0)
    } else {
        let static_seed = build_static(params, optimal_static_threshold(params)?.theta)?.policy;
        let mut search = Search { best: None, iterations: 0, cycled: false };
        for seed in [zeros, ones, static_seed] {
            search.run_from(params, seed)?;
        }
        if search.cycled {
            diagnostics.push(Error::CycleWithoutImprovement.to_string());
        }
        let (policy, _) = search.best.expect("at least one candidate");
        let prof = penalty_roots(params, &policy)?;
        if prof.coefficients.iter().any(|&a| a <= 0.0) {
            diagnostics.push("non-positive penalty coefficient: sorted-root transform and sign rule differ".into());
        }
        (policy, Region::Middle, prof, search.iterations)
    };
    let eta = average_profit(params, &policy)?;

    let oracle = if k <= opts.oracle_limit {
        Some(brute_force_optimal(params)?)
    } else {
        diagnostics.push(format!("oracle skipped: K={k} above limit {}", opts.oracle_limit));
        None
    };
    let oracle_confirmed = oracle.as_ref().map(|bf| (bf.eta - eta).abs() <= 1e-9 * eta.abs().max(1.0));
    if oracle_confirmed == Some(false) {
        diagnostics.push("oracle found a strictly better policy".into());
    }

    Ok(OptimizerReport {
        n0: (region == Region::Middle).then(|| prof.count_below(p)),
        sort_perm: prof.sort_perm.clone(),
        policy,
        eta,
        region,
        oracle_confirmed,
        oracle,
        iterations,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub etas: Vec<f64>,
    /// Index of the first step that increased the profit, if any.
    pub first_violation: Option<usize>,
    pub holds: bool,
}

/// Check eta(chain[0]) >= eta(chain[1]) >= ... within 1e-10.
pub fn monotone_chain_check(params: &SystemParams, chain: &[Policy]) -> Result<MonotoneReport> {
    let etas = chain.iter().map(|d| average_profit(params, d)).collect::<Result<Vec<_>>>()?;
    let first_violation = etas.windows(2).position(|w| w[1] > w[0] + 1e-10).map(|j| j + 1);
    Ok(MonotoneReport { holds: first_violation.is_none(), etas, first_violation })
}
