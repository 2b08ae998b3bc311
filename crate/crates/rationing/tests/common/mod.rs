#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rationing::{Policy, SystemParams};

/// λ = μ₁ = μ₂ = 1, N = 2, K = 1 with the worked-example costs.
pub fn unit(p: f64) -> SystemParams {
    SystemParams {
        lambda: 1.0,
        mu1: 1.0,
        mu2: 1.0,
        capacity_n: 2,
        threshold_k: 1,
        c_hold: 1.0,
        c_lost1: 4.0,
        c_lost2: 1.0,
        c_buy: 5.0,
        c_opp: 1.0,
        price_r: 15.0,
        penalty_p: p,
    }
}

pub fn example1(p: f64) -> SystemParams {
    SystemParams { lambda: 3.0, mu1: 4.0, mu2: 2.0, capacity_n: 100, threshold_k: 15, ..unit(p) }
}

pub fn pol(d: &[u8]) -> Policy {
    Policy::new(d.to_vec()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rates in [0.5, 5], costs in [0, 10], given N, K and P.
pub fn random_params(r: &mut ChaCha8Rng, n: usize, k: usize, p: f64) -> SystemParams {
    SystemParams {
        lambda: r.random_range(0.5..5.0),
        mu1: r.random_range(0.5..5.0),
        mu2: r.random_range(0.5..5.0),
        capacity_n: n,
        threshold_k: k,
        c_hold: r.random_range(0.0..10.0),
        c_lost1: r.random_range(0.0..10.0),
        c_lost2: r.random_range(0.0..10.0),
        c_buy: r.random_range(0.0..10.0),
        c_opp: r.random_range(0.0..10.0),
        price_r: r.random_range(0.0..10.0),
        penalty_p: p,
    }
}

pub fn random_policy(r: &mut ChaCha8Rng, k: usize) -> Policy {
    Policy::new((0..k).map(|_| r.random_range(0..2u8)).collect()).unwrap()
}

/// Reward rate of state `i`, written out term by term from the model's
/// indicator form: revenue, holding, lost sales, purchase/opportunity and
/// penalty.
pub fn reward_oracle(s: &SystemParams, d: &Policy, i: usize) -> f64 {
    let n = s.capacity_n;
    let k = s.threshold_k;
    let di = if i == 0 {
        0.0
    } else if i <= k {
        d.decision(i) as f64
    } else {
        1.0
    };
    let served1 = if i > 0 { 1.0 } else { 0.0 };
    let lost1 = 1.0 - served1;
    let inbound = if i < n { s.c_buy } else { s.c_opp };
    let penalty = if i >= 1 && i <= k { s.penalty_p * s.mu2 * di } else { 0.0 };
    s.price_r * (s.mu1 * served1 + s.mu2 * di)
        - s.c_hold * i as f64
        - s.c_lost1 * s.mu1 * lost1
        - s.c_lost2 * s.mu2 * (1.0 - di)
        - inbound * s.lambda
        - penalty
}

/// Dense generator assembled directly from the transition rates.
pub fn dense_generator(s: &SystemParams, d: &Policy) -> DMatrix<f64> {
    let n = s.capacity_n;
    let mut q = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        if i < n {
            q[(i, i + 1)] = s.lambda;
        }
        if i > 0 {
            let serve2 = if i <= s.threshold_k { d.decision(i) as f64 } else { 1.0 };
            q[(i, i - 1)] = s.mu1 + s.mu2 * serve2;
        }
        let out: f64 = (0..=n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
        q[(i, i)] = -out;
    }
    q
}

/// π from the dense system πQ = 0, πe = 1 (last balance equation replaced).
pub fn dense_stationary(s: &SystemParams, d: &Policy) -> Vec<f64> {
    let q = dense_generator(s, d);
    let m = q.nrows();
    let mut a = q.transpose();
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

/// η = π f with both factors from the oracles above.
pub fn eta_oracle(s: &SystemParams, d: &Policy) -> f64 {
    let pi = dense_stationary(s, d);
    (0..=s.capacity_n).map(|i| pi[i] * reward_oracle(s, d, i)).sum()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
