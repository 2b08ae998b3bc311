//! Event-driven simulation of the rationing chain as an independent check on
//! the analytic profit.
//!
//! Replication `r` draws from ChaCha8 keyed by the master seed on stream `r`,
//! so replications are independent and any one of them can be replayed alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{reward_structure, Policy, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub replications: usize,
    pub seed: u64,
    /// Leading fraction of each run that is discarded.
    pub warmup_fraction: f64,
    /// Initial inventory level.
    pub initial_state: usize,
}

impl SimConfig {
    pub fn new(horizon: f64, replications: usize, seed: u64) -> Self {
        Self { horizon, replications, seed, warmup_fraction: 0.01, initial_state: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    pub eta_hat: f64,
    pub std_err: f64,
    pub replications: usize,
    pub horizon: f64,
    pub seed: u64,
    pub per_replication: Vec<f64>,
    /// Mean fraction of measured time spent in each state.
    pub occupancy: Vec<f64>,
    /// Standard error of each occupancy fraction across replications.
    pub occupancy_std_err: Vec<f64>,
}

struct Replication {
    eta: f64,
    occupancy: Vec<f64>,
}

fn replicate(lambda: f64, down: &[f64], f: &[f64], cfg: &SimConfig, rep: usize) -> Replication {
    let n = down.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64);

    let warmup = cfg.horizon * cfg.warmup_fraction;
    let mut t = 0.0;
    let mut state = cfg.initial_state.min(n);
    let mut time_in = vec![0.0; n + 1];
    while t < cfg.horizon {
        let up = if state < n { lambda } else { 0.0 };
        let dn = if state > 0 { down[state - 1] } else { 0.0 };
        let rate = up + dn;
        let hold: f64 = rng.sample::<f64, _>(Exp1) / rate;
        let end = (t + hold).min(cfg.horizon);
        let start = t.max(warmup);
        if end > start {
            time_in[state] += end - start;
        }
        t += hold;
        if rng.random::<f64>() * rate < up {
            state += 1;
        } else {
            state -= 1;
        }
    }
    let window = cfg.horizon - warmup;
    let occupancy: Vec<f64> = time_in.iter().map(|x| x / window).collect();
    let eta = pairwise_sum(&occupancy.iter().zip(f).map(|(o, fi)| o * fi).collect::<Vec<_>>());
    Replication { eta, occupancy }
}

/// Pairwise summation; the result does not depend on thread scheduling.
fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = pairwise_sum(x) / n;
    let ss: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&ss) / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn simulate(params: &SystemParams, policy: &Policy, cfg: &SimConfig) -> Result<SimEstimate> {
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", cfg.horizon)));
    }
    if cfg.replications < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 replications for a standard error, got {}",
            cfg.replications
        )));
    }
    if !(0.0..1.0).contains(&cfg.warmup_fraction) {
        return Err(Error::InvalidArgument(format!(
            "warm-up fraction must lie in [0, 1), got {}",
            cfg.warmup_fraction
        )));
    }
    let f = reward_structure(params, policy)?.f_values;
    let down = params.down_rates(policy);
    let reps: Vec<Replication> =
        (0..cfg.replications).into_par_iter().map(|r| replicate(params.lambda, &down, &f, cfg, r)).collect();

    let per_replication: Vec<f64> = reps.iter().map(|r| r.eta).collect();
    let (eta_hat, std_err) = mean_and_se(&per_replication);
    let n_states = params.n() + 1;
    let (occupancy, occupancy_std_err) = (0..n_states)
        .map(|s| {
            let col: Vec<f64> = reps.iter().map(|r| r.occupancy[s]).collect();
            mean_and_se(&col)
        })
        .unzip();
    Ok(SimEstimate {
        eta_hat,
        std_err,
        replications: cfg.replications,
        horizon: cfg.horizon,
        seed: cfg.seed,
        per_replication,
        occupancy,
        occupancy_std_err,
    })
}
