//! The policy-driven birth-death chain: generator, stationary law, profit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{reward_structure, Policy, SystemParams};

/// Tridiagonal generator over states 0..=N.
///
/// `sub[i-1]` is the rate i -> i-1, `sup[i]` the rate i -> i+1 and `diag[i]`
/// the negated row sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let n = self.dim() - 1;
        (0..=n)
            .map(|i| {
                let mut s = self.diag[i];
                if i > 0 {
                    s += self.sub[i - 1];
                }
                if i < n {
                    s += self.sup[i];
                }
                s
            })
            .collect()
    }

    /// x B (row vector times generator).
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim() - 1;
        (0..=n)
            .map(|j| {
                let mut s = x[j] * self.diag[j];
                if j > 0 {
                    s += x[j - 1] * self.sup[j - 1];
                }
                if j < n {
                    s += x[j + 1] * self.sub[j];
                }
                s
            })
            .collect()
    }

    /// B y (generator times column vector).
    pub fn right_mul(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim() - 1;
        (0..=n)
            .map(|i| {
                let mut s = self.diag[i] * y[i];
                if i > 0 {
                    s += self.sub[i - 1] * y[i - 1];
                }
                if i < n {
                    s += self.sup[i] * y[i + 1];
                }
                s
            })
            .collect()
    }

    /// Dense row-major copy, mostly for cross-checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim() - 1;
        let mut m = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..=n {
            m[i][i] = self.diag[i];
            if i > 0 {
                m[i][i - 1] = self.sub[i - 1];
            }
            if i < n {
                m[i][i + 1] = self.sup[i];
            }
        }
        m
    }
}

pub fn build_generator(params: &SystemParams, policy: &Policy) -> Result<Generator> {
    params.check_policy(policy)?;
    let n = params.n();
    let sub = params.down_rates(policy);
    let sup = vec![params.lambda; n];
    let diag = (0..=n)
        .map(|i| {
            let up = if i < n { params.lambda } else { 0.0 };
            let down = if i > 0 { sub[i - 1] } else { 0.0 };
            -(up + down)
        })
        .collect();
    Ok(Generator { sub, diag, sup })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    /// Unnormalised weights with xi[0] = 1.
    pub xi: Vec<f64>,
    /// Normaliser h = sum of xi.
    pub h: f64,
}

/// Product-form stationary law, built by ratio multiplication so that large N
/// does not overflow through raw powers.
pub fn stationary_distribution(params: &SystemParams, policy: &Policy) -> Result<StationaryDistribution> {
    params.check_policy(policy)?;
    let n = params.n();
    let mut xi = Vec::with_capacity(n + 1);
    xi.push(1.0);
    for i in 1..=n {
        let w = xi[i - 1] * (params.lambda / params.down_rate(policy, i));
        if !w.is_finite() {
            return Err(Error::NumericalOverflow { state: i });
        }
        xi.push(w);
    }
    let h: f64 = xi.iter().sum();
    if !h.is_finite() {
        return Err(Error::NumericalOverflow { state: n });
    }
    let pi = xi.iter().map(|w| w / h).collect();
    Ok(StationaryDistribution { pi, xi, h })
}

/// eta(P) = D - P * F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfitLinearForm {
    pub d_coef: f64,
    pub f_coef: f64,
}

impl ProfitLinearForm {
    pub fn eta(&self, p: f64) -> f64 {
        self.d_coef - p * self.f_coef
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn average_profit(params: &SystemParams, policy: &Policy) -> Result<f64> {
    let st = stationary_distribution(params, policy)?;
    let rw = reward_structure(params, policy)?;
    Ok(dot(&st.pi, &rw.f_values))
}

pub fn profit_linear_form(params: &SystemParams, policy: &Policy) -> Result<ProfitLinearForm> {
    let st = stationary_distribution(params, policy)?;
    let rw = reward_structure(params, policy)?;
    Ok(ProfitLinearForm { d_coef: dot(&st.pi, &rw.b_coeffs), f_coef: dot(&st.pi, &rw.a_coeffs) })
}
