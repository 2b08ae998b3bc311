//! System parameters, rationing policies, rewards and policy-set combinatorics.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest K for which the exhaustive enumeration is allowed to run.
pub const ENUMERATION_CAP: usize = 24;

/// Rates, capacities and the economic parameters of the warehouse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Arrival rate of replenishment units.
    pub lambda: f64,
    /// Class-1 demand rate.
    pub mu1: f64,
    /// Class-2 demand rate.
    pub mu2: f64,
    /// Warehouse capacity N.
    pub capacity_n: usize,
    /// Rationing threshold K.
    pub threshold_k: usize,
    /// Holding cost per unit per unit time (C1).
    pub c_hold: f64,
    /// Lost-sale cost for Class 1 (C2,1).
    pub c_lost1: f64,
    /// Lost-sale cost for Class 2 (C2,2).
    pub c_lost2: f64,
    /// Purchase price per unit (C3).
    pub c_buy: f64,
    /// Opportunity cost per rejected inbound unit (C4).
    pub c_opp: f64,
    /// Service price per satisfied demand (R).
    pub price_r: f64,
    /// Penalty per Class-2 unit served at low stock (P).
    pub penalty_p: f64,
}

impl SystemParams {
    pub fn n(&self) -> usize {
        self.capacity_n
    }

    pub fn k(&self) -> usize {
        self.threshold_k
    }

    /// Same system with a different penalty cost.
    pub fn with_penalty(&self, p: f64) -> Self {
        Self { penalty_p: p, ..*self }
    }

    /// b = R + C2,2 - P, the offset added to a realization factor when
    /// comparing two policies that differ in one position.
    pub fn offset_b(&self) -> f64 {
        self.price_r + self.c_lost2 - self.penalty_p
    }

    /// Down-rate out of state `i` (1..=N) under `policy`.
    pub fn down_rate(&self, policy: &Policy, i: usize) -> f64 {
        debug_assert!(i >= 1 && i <= self.capacity_n);
        if i <= self.threshold_k {
            self.mu1 + self.mu2 * f64::from(policy.decision(i))
        } else {
            self.mu1 + self.mu2
        }
    }

    /// Down-rates v_1..v_N as a vector indexed from zero (entry i-1 is state i).
    pub fn down_rates(&self, policy: &Policy) -> Vec<f64> {
        (1..=self.capacity_n).map(|i| self.down_rate(policy, i)).collect()
    }

    /// Reject a decision vector whose length is not K.
    pub fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.len() != self.threshold_k {
            return Err(Error::LengthMismatch { expected: self.threshold_k, found: policy.len() });
        }
        Ok(())
    }
}

/// Parameters that passed validation, plus any non-fatal findings.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub params: SystemParams,
    pub warnings: Vec<Error>,
}

/// Check the model assumptions.
///
/// `PriorityViolation` (C2,1 <= C2,2) is returned as a warning only; every
/// formula stays well defined without it.
pub fn validate_params(raw: SystemParams) -> Result<Validated> {
    for (name, value) in [("lambda", raw.lambda), ("mu1", raw.mu1), ("mu2", raw.mu2)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveRate { name, value });
        }
    }
    if raw.threshold_k < 1 || raw.threshold_k > raw.capacity_n {
        return Err(Error::BadThreshold { k: raw.threshold_k, n: raw.capacity_n });
    }
    for (name, value) in [
        ("c_hold", raw.c_hold),
        ("c_lost1", raw.c_lost1),
        ("c_lost2", raw.c_lost2),
        ("c_buy", raw.c_buy),
        ("c_opp", raw.c_opp),
        ("price_r", raw.price_r),
        ("penalty_p", raw.penalty_p),
    ] {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::BadCost { name, value });
        }
    }
    let mut warnings = Vec::new();
    if raw.c_lost1 <= raw.c_lost2 {
        warnings.push(Error::PriorityViolation { c_lost1: raw.c_lost1, c_lost2: raw.c_lost2 });
    }
    Ok(Validated { params: raw, warnings })
}

/// Decisions d_1..d_K. State 0 always rejects Class 2 and states above K
/// always serve it, so those entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<u8>")]
pub struct Policy {
    decisions: Vec<u8>,
}

impl Policy {
    pub fn new(decisions: Vec<u8>) -> Result<Self> {
        if let Some((position, &value)) = decisions.iter().enumerate().find(|(_, &d)| d > 1) {
            return Err(Error::BadDecision { position: position + 1, value: i64::from(value) });
        }
        Ok(Self { decisions })
    }

    pub fn zeros(k: usize) -> Self {
        Self { decisions: vec![0; k] }
    }

    pub fn ones(k: usize) -> Self {
        Self { decisions: vec![1; k] }
    }

    /// The `index`-th policy in lexicographic order of (d_1..d_K): d_1 is the
    /// most significant bit.
    pub fn from_index(k: usize, index: u64) -> Self {
        let decisions = (0..k).map(|j| ((index >> (k - 1 - j)) & 1) as u8).collect();
        Self { decisions }
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    /// d_i for 1 <= i <= K.
    pub fn decision(&self, i: usize) -> u8 {
        self.decisions[i - 1]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.decisions
    }

    /// Copy with position `i` (1-based) flipped.
    pub fn flipped(&self, i: usize) -> Self {
        let mut decisions = self.decisions.clone();
        decisions[i - 1] ^= 1;
        Self { decisions }
    }

    /// True if the decisions are of the form 0..0 1..1.
    pub fn is_threshold(&self) -> bool {
        self.decisions.windows(2).all(|w| w[0] <= w[1])
    }
}

impl TryFrom<Vec<i64>> for Policy {
    type Error = Error;

    fn try_from(raw: Vec<i64>) -> Result<Self> {
        let mut decisions = Vec::with_capacity(raw.len());
        for (j, value) in raw.into_iter().enumerate() {
            match value {
                0 | 1 => decisions.push(value as u8),
                _ => return Err(Error::BadDecision { position: j + 1, value }),
            }
        }
        Ok(Self { decisions })
    }
}

impl From<Policy> for Vec<u8> {
    fn from(p: Policy) -> Self {
        p.decisions
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(0;")?;
        for (j, d) in self.decisions.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ";1..1)")
    }
}

/// Per-state reward split into its penalty-free part and the coefficient of -P.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardStructure {
    pub a_coeffs: Vec<f64>,
    pub b_coeffs: Vec<f64>,
    pub f_values: Vec<f64>,
}

/// Reward rates f_0..f_N with f_i = B_i - P*A_i.
///
/// When K = N the last state is both a rationing state and the full state, so
/// it keeps its decision and pays C4 instead of C3.
pub fn reward_structure(params: &SystemParams, policy: &Policy) -> Result<RewardStructure> {
    params.check_policy(policy)?;
    let SystemParams {
        lambda,
        mu1,
        mu2,
        capacity_n: n,
        threshold_k: k,
        c_hold,
        c_lost1,
        c_lost2,
        c_buy,
        c_opp,
        price_r,
        penalty_p,
    } = *params;

    let mut a = vec![0.0; n + 1];
    let mut b = vec![0.0; n + 1];
    b[0] = -c_lost1 * mu1 - c_lost2 * mu2 - c_buy * lambda;
    for i in 1..=n {
        let d = if i <= k { f64::from(policy.decision(i)) } else { 1.0 };
        let inbound = if i < n { c_buy * lambda } else { c_opp * lambda };
        b[i] = price_r * (mu1 + mu2 * d) - c_hold * i as f64 - c_lost2 * mu2 * (1.0 - d) - inbound;
        if i <= k {
            a[i] = mu2 * d;
        }
    }
    let f = b.iter().zip(&a).map(|(bi, ai)| bi - penalty_p * ai).collect();
    Ok(RewardStructure { a_coeffs: a, b_coeffs: b, f_values: f })
}

/// Positions (1-based, ascending) where two policies disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DifferenceSet {
    pub positions: Vec<usize>,
}

impl DifferenceSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Positions in 1..=k that are *not* in the set.
    pub fn complement(&self, k: usize) -> Vec<usize> {
        (1..=k).filter(|i| !self.positions.contains(i)).collect()
    }
}

pub fn difference_set(d: &Policy, c: &Policy) -> Result<DifferenceSet> {
    if d.len() != c.len() {
        return Err(Error::LengthMismatch { expected: d.len(), found: c.len() });
    }
    let positions =
        d.as_slice().iter().zip(c.as_slice()).enumerate().filter(|(_, (a, b))| a != b).map(|(j, _)| j + 1).collect();
    Ok(DifferenceSet { positions })
}

/// Walk from `d` to `c` one flip at a time, flipping positions in `order`.
///
/// Returns d(1), ..., d(n) with d(n) = c; `d` itself is not included.
pub fn adjacent_chain(d: &Policy, c: &Policy, order: &[usize]) -> Result<Vec<Policy>> {
    let s = difference_set(d, c)?;
    let wanted: BTreeSet<usize> = s.positions.iter().copied().collect();
    let given: BTreeSet<usize> = order.iter().copied().collect();
    if given.len() != order.len() || given != wanted {
        return Err(Error::InvalidOrder);
    }
    let mut chain = Vec::with_capacity(order.len());
    let mut cur = d.clone();
    for &j in order {
        cur = cur.flipped(j);
        chain.push(cur.clone());
    }
    Ok(chain)
}

/// Iterator over all 2^K policies in lexicographic order.
#[derive(Debug, Clone)]
pub struct PolicyIter {
    k: usize,
    next: u64,
    end: u64,
}

impl PolicyIter {
    /// Restrict to the index range [start, end); used to split work.
    pub fn range(k: usize, start: u64, end: u64) -> Self {
        Self { k, next: start, end }
    }

    pub fn total(&self) -> u64 {
        self.end
    }
}

impl Iterator for PolicyIter {
    type Item = Policy;

    fn next(&mut self) -> Option<Policy> {
        if self.next >= self.end {
            return None;
        }
        let p = Policy::from_index(self.k, self.next);
        self.next += 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PolicyIter {}

pub fn enumerate_policies(k: usize) -> Result<PolicyIter> {
    enumerate_policies_with_cap(k, ENUMERATION_CAP)
}

pub fn enumerate_policies_with_cap(k: usize, cap: usize) -> Result<PolicyIter> {
    if k > cap || k >= 64 {
        return Err(Error::CapExceeded { k, cap });
    }
    Ok(PolicyIter { k, next: 0, end: 1u64 << k })
}
