//! Performance-difference formulas, penalty roots and sign analysis.

use serde::Serialize;

use crate::chain::{build_generator, dot, profit_linear_form, stationary_distribution};
use crate::error::{Error, Result};
use crate::model::{adjacent_chain, difference_set, reward_structure, Policy, SystemParams};
use crate::poisson::{closure_tolerance, realization_factors_recurrence, recurrence, solve_poisson};

/// Relative width of the band in which G(i) + b counts as zero.
pub const SIGN_TOLERANCE: f64 = 1e-9;

/// Below this magnitude the P-coefficient of G(i) + b counts as zero.
pub const DEGENERATE_COEF: f64 = 1e-12;

/// eta(d') - eta(d) = pi' [ (B' - B) g + (f' - f) ], using only the potential of d.
pub fn difference_general(params: &SystemParams, d: &Policy, d_prime: &Policy) -> Result<f64> {
    let sol = solve_poisson(params, d, 0.0, 0.0)?;
    let gen = build_generator(params, d)?;
    let gen_p = build_generator(params, d_prime)?;
    let f = reward_structure(params, d)?.f_values;
    let f_p = reward_structure(params, d_prime)?.f_values;
    let pi_p = stationary_distribution(params, d_prime)?.pi;

    let bg = gen.right_mul(&sol.g);
    let bg_p = gen_p.right_mul(&sol.g);
    let inner: Vec<f64> = (0..bg.len()).map(|i| (bg_p[i] - bg[i]) + (f_p[i] - f[i])).collect();
    Ok(dot(&pi_p, &inner))
}

/// Single-flip form: mu2 * pi'(i) * (d'_i - d_i) * (G(i) + b).
pub fn difference_one_position(params: &SystemParams, d: &Policy, d_prime: &Policy, i: usize) -> Result<f64> {
    let s = difference_set(d, d_prime)?;
    if s.len() != 1 || s.positions[0] != i {
        return Err(Error::NotSingleFlip { size: s.len() });
    }
    let eta = crate::chain::average_profit(params, d)?;
    let rf = realization_factors_recurrence(params, d, eta)?;
    let pi_p = stationary_distribution(params, d_prime)?.pi;
    let step = f64::from(d_prime.decision(i)) - f64::from(d.decision(i));
    Ok(params.mu2 * pi_p[i] * step * rf.shifted(i))
}

/// Penalty roots of one policy together with the affine pieces they come from.
///
/// G(i) + b = const_terms[i-1] - P * coefficients[i-1], both independent of P.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyProfile {
    pub roots: Vec<f64>,
    pub const_terms: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub p_high: f64,
    pub p_low: f64,
    /// 1-based positions sorted by ascending root, ties by position.
    pub sort_perm: Vec<usize>,
    /// Positions whose coefficient vanished (root is a signed infinity).
    pub degenerate: Vec<usize>,
}

impl PenaltyProfile {
    /// G(i) + b at penalty `p`.
    pub fn shifted_at(&self, i: usize, p: f64) -> f64 {
        self.const_terms[i - 1] - p * self.coefficients[i - 1]
    }

    /// Rank (1-based) of each position in `sort_perm`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.sort_perm.len()];
        for (r, &i) in self.sort_perm.iter().enumerate() {
            rank[i - 1] = r + 1;
        }
        rank
    }

    /// Number of roots strictly below `p`.
    pub fn count_below(&self, p: f64) -> usize {
        self.roots.iter().filter(|&&r| r < p).count()
    }
}

/// Penalty roots P_i solving G(i) + b = 0, assembled from the A/B split of
/// the reward so that no root-finding is involved.
pub fn penalty_roots(params: &SystemParams, policy: &Policy) -> Result<PenaltyProfile> {
    let k = params.k();
    let st = stationary_distribution(params, policy)?;
    let rw = reward_structure(params, policy)?;
    let lf = profit_linear_form(params, policy)?;
    let v = params.down_rates(policy);

    let rec_b = recurrence(params.lambda, &v, &st.pi, &rw.b_coeffs, lf.d_coef);
    let rec_a = recurrence(params.lambda, &v, &st.pi, &rw.a_coeffs, lf.f_coef);
    for (rec, mean) in [(&rec_b, lf.d_coef), (&rec_a, lf.f_coef)] {
        let tolerance = closure_tolerance(mean);
        if rec.closure.is_nan() || rec.closure > tolerance {
            return Err(Error::InconsistentTermination { residual: rec.closure, tolerance });
        }
    }

    let mut roots = Vec::with_capacity(k);
    let mut const_terms = Vec::with_capacity(k);
    let mut coefficients = Vec::with_capacity(k);
    let mut degenerate = Vec::new();
    for i in 1..=k {
        let c = params.price_r + params.c_lost2 + rec_b.factors[i - 1];
        let a = 1.0 + rec_a.factors[i - 1];
        let root = if a.abs() < DEGENERATE_COEF {
            degenerate.push(i);
            if c >= 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            c / a
        };
        roots.push(root);
        const_terms.push(c);
        coefficients.push(a);
    }

    let p_high = roots.iter().copied().fold(0.0, f64::max);
    let p_low = roots.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sort_perm: Vec<usize> = (1..=k).collect();
    sort_perm.sort_by(|&x, &y| roots[x - 1].total_cmp(&roots[y - 1]));

    Ok(PenaltyProfile { roots, const_terms, coefficients, p_high, p_low, sort_perm, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

fn label(value: f64, scale: f64) -> Sign {
    if value.abs() <= SIGN_TOLERANCE * scale.max(1.0) {
        Sign::Zero
    } else if value > 0.0 {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// Sign of G(i) + b for i = 1..K at penalty `p`.
pub fn classify_sign(params: &SystemParams, policy: &Policy, p: f64) -> Result<Vec<Sign>> {
    let prof = penalty_roots(params, policy)?;
    Ok(sign_labels(&prof, p))
}

pub(crate) fn sign_labels(prof: &PenaltyProfile, p: f64) -> Vec<Sign> {
    (1..=prof.roots.len())
        .map(|i| {
            let c = prof.const_terms[i - 1];
            let a = prof.coefficients[i - 1] * p;
            label(c - a, c.abs().max(a.abs()))
        })
        .collect()
}

/// Which of the two pure penalty regions a penalty falls in for a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    HighPenalty,
    LowPenalty,
    Middle,
}

pub(crate) fn region_of(prof: &PenaltyProfile, p: f64) -> Region {
    if p >= prof.p_high {
        Region::HighPenalty
    } else if prof.p_low > 0.0 && p <= prof.p_low {
        Region::LowPenalty
    } else {
        Region::Middle
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionEvidence {
    pub position: usize,
    /// G^(c)(i) + b.
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEvidence {
    pub step: usize,
    pub position: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassPropertyReport {
    /// Region of `p` relative to the reference policy's critical values.
    pub region: Region,
    pub positions: Vec<PositionEvidence>,
    /// Ratio identity along the chain that flips S(d, c) in ascending order.
    pub ratio_steps: Vec<RatioEvidence>,
    /// Every sign claim held (vacuous in the middle region).
    pub holds: bool,
    pub ratio_identity_holds: bool,
}

/// Check the claimed class property: if P >= P_H(d) then G^(c)(i) + b <= 0 on
/// S(d, c) for every c, and symmetrically in the low region. A violation is
/// returned as evidence, not as an error.
pub fn class_property_check(params: &SystemParams, d: &Policy, c: &Policy, p: f64) -> Result<ClassPropertyReport> {
    let params = params.with_penalty(p);
    let prof_d = penalty_roots(&params, d)?;
    let prof_c = penalty_roots(&params, c)?;
    let region = region_of(&prof_d, p);
    let s = difference_set(d, c)?;

    let mut positions = Vec::with_capacity(s.len());
    for &i in &s.positions {
        let value = prof_c.shifted_at(i, p);
        let tol = SIGN_TOLERANCE * prof_c.const_terms[i - 1].abs().max((p * prof_c.coefficients[i - 1]).abs()).max(1.0);
        let holds = match region {
            Region::HighPenalty => value <= tol,
            Region::LowPenalty => value >= -tol,
            Region::Middle => true,
        };
        positions.push(PositionEvidence { position: i, value, holds });
    }

    let chain = adjacent_chain(d, c, &s.positions)?;
    let mut ratio_steps = Vec::with_capacity(chain.len());
    let mut prev = d.clone();
    let mut prev_prof = prof_d.clone();
    let mut prev_pi = stationary_distribution(&params, d)?.pi;
    for (step, (cur, &j)) in chain.iter().zip(&s.positions).enumerate() {
        let cur_prof = penalty_roots(&params, cur)?;
        let cur_pi = stationary_distribution(&params, cur)?.pi;
        let lhs = cur_prof.shifted_at(j, p);
        let rhs = cur_pi[j] / prev_pi[j] * prev_prof.shifted_at(j, p);
        let holds = (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()).max(1.0);
        ratio_steps.push(RatioEvidence { step: step + 1, position: j, lhs, rhs, holds });
        prev = cur.clone();
        prev_prof = cur_prof;
        prev_pi = cur_pi;
    }
    debug_assert!(s.is_empty() || &prev == c);

    Ok(ClassPropertyReport {
        region,
        holds: positions.iter().all(|e| e.holds),
        ratio_identity_holds: ratio_steps.iter().all(|e| e.holds),
        positions,
        ratio_steps,
    })
}
