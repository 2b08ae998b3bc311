//! Poisson equation -B g = f - eta e and the realization factors
//! G(i) = g(i-1) - g(i), computed three independent ways.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chain::{build_generator, dot, stationary_distribution, Generator};
use crate::error::{Error, Result};
use crate::model::{reward_structure, Policy, SystemParams};

/// Pivots smaller than this (relative to the row scale) count as singular.
const PIVOT_FLOOR: f64 = 1e-300;

/// Solve a tridiagonal system by forward elimination and back substitution
/// (no pivoting).
///
/// `lower[i]` multiplies x[i] in row i+1, `upper[i]` multiplies x[i+1] in
/// row i. Intended for diagonally dominant matrices.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if lower.len() != n - 1 || upper.len() != n - 1 {
        return Err(Error::LengthMismatch { expected: n - 1, found: lower.len().min(upper.len()) });
    }
    if rhs.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: rhs.len() });
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - lower[i - 1] * c[i - 1];
        }
        if !pivot.is_finite() || pivot.abs() < PIVOT_FLOOR {
            return Err(Error::SingularSystem { row: i, pivot });
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        let carry = if i > 0 { lower[i - 1] * d[i - 1] } else { 0.0 };
        d[i] = (rhs[i] - carry) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonSolution {
    pub g: Vec<f64>,
    /// Value chosen for g(0) before the displacement.
    pub free_im: f64,
    /// Displacement added to every entry.
    pub free_xi: f64,
    pub eta: f64,
    /// Infinity norm of (-B g) - (f - eta e).
    pub residual: f64,
}

/// Infinity norm of (-B g) - (f - eta e).
pub fn poisson_residual(gen: &Generator, g: &[f64], f: &[f64], eta: f64) -> f64 {
    gen.right_mul(g).iter().zip(f).map(|(bg, fi)| (-bg - (fi - eta)).abs()).fold(0.0, f64::max)
}

/// Tridiagonal M-matrix solve where the matrix is given by the magnitudes of
/// its off-diagonals and its row excess (diagonal minus off-diagonal sums).
///
/// Row i reads (excess_i + sub_i + sup_i) x_i - sub_i x_{i-1} - sup_i x_{i+1}.
/// Carrying the excess through the elimination keeps every pivot a sum of
/// non-negative terms, so pivots never suffer cancellation even when the
/// matrix is nearly singular.
pub fn solve_mmatrix_tridiagonal(sub: &[f64], sup: &[f64], excess: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = excess.len();
    for len in [sub.len(), sup.len(), rhs.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, found: len });
        }
    }
    let mut pivot = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut e_prev = 0.0;
    for i in 0..n {
        let carried = if i > 0 { sub[i] * e_prev / pivot[i - 1] } else { 0.0 };
        let e = excess[i] + carried;
        pivot[i] = e + sup[i];
        if pivot[i].is_nan() || pivot[i] <= PIVOT_FLOOR || pivot[i].is_infinite() {
            return Err(Error::SingularSystem { row: i, pivot: pivot[i] });
        }
        let prev_y = if i > 0 { sub[i] * y[i - 1] } else { 0.0 };
        y[i] = (rhs[i] + prev_y) / pivot[i];
        e_prev = e;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        y[i] += sup[i] * y[i + 1] / pivot[i];
    }
    Ok(y)
}

/// Mode of the stationary law (first maximiser).
fn mode(pi: &[f64]) -> usize {
    pi.iter().enumerate().fold(0, |best, (i, &x)| if x > pi[best] { i } else { best })
}

/// Special solution with g(0) = 0.
///
/// Mathematically this is (0, (-𝓑)^-1 H). Solving the state-0-pinned system
/// directly amplifies the rounding in eta by the hitting time of state 0,
/// which is astronomically large when stock piles up, so the same vector is
/// obtained by pinning the mode of pi (two well-conditioned blocks, each
/// swept toward the pin) and then re-anchoring at state 0.
fn special_solution(lambda: f64, v: &[f64], pi: &[f64], f: &[f64], eta: f64) -> Result<Vec<f64>> {
    let n = v.len();
    let p = mode(pi);
    let rate_down = |i: usize| if i == 0 { 0.0 } else { v[i - 1] };
    let mut g = vec![0.0; n + 1];

    // states 0..p-1, swept top-down toward the pin
    if p > 0 {
        let sub: Vec<f64> = (0..p).map(rate_down).collect();
        let sup: Vec<f64> = (0..p).map(|i| if i + 1 < p { lambda } else { 0.0 }).collect();
        let excess: Vec<f64> = (0..p).map(|i| if i + 1 == p { lambda } else { 0.0 }).collect();
        let rhs: Vec<f64> = (0..p).map(|i| f[i] - eta).collect();
        let x = solve_mmatrix_tridiagonal(&sub, &sup, &excess, &rhs)?;
        g[..p].copy_from_slice(&x);
    }
    // states N..p+1, swept bottom-up toward the pin
    if p < n {
        let states: Vec<usize> = (p + 1..=n).rev().collect();
        let sub: Vec<f64> = states.iter().map(|&i| if i < n { lambda } else { 0.0 }).collect();
        let sup: Vec<f64> = states.iter().map(|&i| if i > p + 1 { rate_down(i) } else { 0.0 }).collect();
        let excess: Vec<f64> = states.iter().map(|&i| if i == p + 1 { rate_down(i) } else { 0.0 }).collect();
        let rhs: Vec<f64> = states.iter().map(|&i| f[i] - eta).collect();
        let x = solve_mmatrix_tridiagonal(&sub, &sup, &excess, &rhs)?;
        for (&i, xi) in states.iter().zip(x) {
            g[i] = xi;
        }
    }
    let g0 = g[0];
    for gi in g.iter_mut() {
        *gi -= g0;
    }
    Ok(g)
}

/// g = (0, (-𝓑)^-1 H) + im * (1, v_1 (-𝓑)^-1 e_1) + xi_shift * e,
/// with H the state-1..N part of f - eta e and 𝓑 the generator without
/// state 0.
pub fn solve_poisson(params: &SystemParams, policy: &Policy, im: f64, xi_shift: f64) -> Result<PoissonSolution> {
    let gen = build_generator(params, policy)?;
    let rw = reward_structure(params, policy)?;
    let st = stationary_distribution(params, policy)?;
    let eta = dot(&st.pi, &rw.f_values);

    let mut g = special_solution(params.lambda, &gen.sub, &st.pi, &rw.f_values, eta)?;
    if im != 0.0 {
        let dir = im_direction_from(&gen)?;
        for (gi, di) in g.iter_mut().zip(&dir) {
            *gi += im * di;
        }
    }
    for gi in g.iter_mut() {
        *gi += xi_shift;
    }
    let residual = poisson_residual(&gen, &g, &rw.f_values, eta);
    Ok(PoissonSolution { g, free_im: im, free_xi: xi_shift, eta, residual })
}

/// (1, v_1 (-𝓑)^-1 e_1) by a tridiagonal solve of the reduced system.
fn im_direction_from(gen: &Generator) -> Result<Vec<f64>> {
    let n = gen.dim() - 1;
    // -𝓑 row i (state i): -v_i x_{i-1} + (lambda 1{i<N} + v_i) x_i - lambda x_{i+1};
    // the state-0 column is gone, which leaves v_1 as row excess in row 1.
    let sub: Vec<f64> = (1..=n).map(|i| if i > 1 { gen.sub[i - 1] } else { 0.0 }).collect();
    let sup: Vec<f64> = (1..=n).map(|i| if i < n { gen.sup[i] } else { 0.0 }).collect();
    let excess: Vec<f64> = (1..=n).map(|i| if i == 1 { gen.sub[0] } else { 0.0 }).collect();
    let mut rhs = vec![0.0; n];
    rhs[0] = gen.sub[0];
    let tail = solve_mmatrix_tridiagonal(&sub, &sup, &excess, &rhs)?;
    let mut dir = Vec::with_capacity(n + 1);
    dir.push(1.0);
    dir.extend(tail);
    Ok(dir)
}

/// The structure vector (1, v_1 (-𝓑)^-1 e_1) multiplying the free constant.
///
/// It is the all-ones vector up to rounding, which is why neither free
/// constant can move a realization factor.
pub fn im_direction(params: &SystemParams, policy: &Policy) -> Result<Vec<f64>> {
    let gen = build_generator(params, policy)?;
    im_direction_from(&gen)
}

/// Solve (-B + e pi) g = f densely; the answer satisfies pi g = eta.
pub fn solve_poisson_normalized(params: &SystemParams, policy: &Policy) -> Result<PoissonSolution> {
    let gen = build_generator(params, policy)?;
    let rw = reward_structure(params, policy)?;
    let st = stationary_distribution(params, policy)?;
    let eta = dot(&st.pi, &rw.f_values);
    let dim = gen.dim();

    let dense = gen.to_dense();
    let m = DMatrix::from_fn(dim, dim, |i, j| -dense[i][j] + st.pi[j]);
    let rhs = DVector::from_column_slice(&rw.f_values);
    let lu = m.lu();
    let sol = lu.solve(&rhs).ok_or(Error::SingularSystem { row: 0, pivot: 0.0 })?;
    let g: Vec<f64> = sol.iter().copied().collect();
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSystem { row: 0, pivot: f64::NAN });
    }
    let residual = poisson_residual(&gen, &g, &rw.f_values, eta);
    Ok(PoissonSolution { free_im: g[0], free_xi: 0.0, g, eta, residual })
}

/// G(1..N) and the offset b = R + C2,2 - P.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationFactors {
    /// Entry i-1 holds G(i).
    pub g_diff: Vec<f64>,
    pub offset_b: f64,
}

impl RealizationFactors {
    /// G(i) for 1 <= i <= N.
    pub fn get(&self, i: usize) -> f64 {
        self.g_diff[i - 1]
    }

    /// G(i) + b.
    pub fn shifted(&self, i: usize) -> f64 {
        self.g_diff[i - 1] + self.offset_b
    }
}

pub fn realization_factors_from_potential(params: &SystemParams, sol: &PoissonSolution) -> RealizationFactors {
    let g_diff = sol.g.windows(2).map(|w| w[0] - w[1]).collect();
    RealizationFactors { g_diff, offset_b: params.offset_b() }
}

/// Output of the two-sided recurrence.
#[derive(Debug, Clone)]
pub(crate) struct Recurrence {
    pub factors: Vec<f64>,
    /// Mismatch between the forward sweep and the boundary/backward sweep.
    pub closure: f64,
}

/// Recurrence for the factors of an arbitrary reward vector `r` whose
/// stationary mean is `mean`.
///
/// Rows 0..p are swept forward from state 0 and rows p+1..N backward from
/// state N, with p the mode of `pi`. Each direction runs where it damps
/// rounding error; the one leftover relation is the closure check. With the
/// mode at N this is the plain forward sweep closed by the state-N row.
pub(crate) fn recurrence(lambda: f64, v: &[f64], pi: &[f64], r: &[f64], mean: f64) -> Recurrence {
    let n = v.len();
    let p = pi.iter().enumerate().fold(0, |best, (i, &x)| if x > pi[best] { i } else { best });
    let mut out = vec![0.0; n];

    // forward: lambda G(1) = r_0 - mean, lambda G(i+1) = v_i G(i) + r_i - mean
    let mut cur = (r[0] - mean) / lambda;
    out[0] = cur;
    for i in 1..p.min(n) {
        cur = (v[i - 1] * cur + r[i] - mean) / lambda;
        out[i] = cur;
    }
    if p == n {
        let closure = (v[n - 1] * out[n - 1] - (mean - r[n])).abs();
        return Recurrence { factors: out, closure };
    }
    let fwd_next = if p == 0 { out[0] } else { (v[p - 1] * out[p - 1] + r[p] - mean) / lambda };

    // backward: v_N G(N) = mean - r_N, v_i G(i) = lambda G(i+1) - (r_i - mean)
    let mut cur = (mean - r[n]) / v[n - 1];
    out[n - 1] = cur;
    for i in (p + 1..n).rev() {
        cur = (lambda * cur - (r[i] - mean)) / v[i - 1];
        out[i - 1] = cur;
    }
    let closure = v[p] * (fwd_next - out[p]).abs();
    Recurrence { factors: out, closure }
}

pub(crate) fn closure_tolerance(eta: f64) -> f64 {
    1e-6 * eta.abs().max(1.0)
}

/// G(1..N) from the recurrence relations, with the overdetermined leftover
/// relation enforced as a consistency check.
pub fn realization_factors_recurrence(params: &SystemParams, policy: &Policy, eta: f64) -> Result<RealizationFactors> {
    let st = stationary_distribution(params, policy)?;
    let rw = reward_structure(params, policy)?;
    let v = params.down_rates(policy);
    let rec = recurrence(params.lambda, &v, &st.pi, &rw.f_values, eta);
    let tolerance = closure_tolerance(eta);
    if rec.closure.is_nan() || rec.closure > tolerance {
        return Err(Error::InconsistentTermination { residual: rec.closure, tolerance });
    }
    Ok(RealizationFactors { g_diff: rec.factors, offset_b: params.offset_b() })
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Explicit product-sum expression
///
/// G(i) = lambda^-i (f_0 - eta) prod_{k=1}^{i-1} v_k
///      + sum_{r=1}^{i-1} lambda^{r-i} (f_r - eta) prod_{k=r+1}^{i-1} v_k,
///
/// valid for every 1 <= i <= N (above K the rates are simply mu1 + mu2).
/// Evaluated literally, so it inherits the conditioning of the forward sweep.
pub fn realization_factor_closed_form(params: &SystemParams, policy: &Policy, eta: f64, i: usize) -> Result<f64> {
    let n = params.n();
    if i < 1 || i > n {
        return Err(Error::IndexOutOfRange { i, n });
    }
    let rw = reward_structure(params, policy)?;
    let v = params.down_rates(policy);
    Ok(closed_form_terms(params.lambda, &v, &rw.f_values, eta, i))
}

fn closed_form_terms(lambda: f64, v: &[f64], f: &[f64], eta: f64, i: usize) -> f64 {
    // weight for term r is lambda^{r-i} prod_{k=r+1}^{i-1} v_k; walk r downward
    let mut w = 1.0 / lambda;
    let mut terms = Vec::with_capacity(i);
    for r in (0..i).rev() {
        terms.push(w * (f[r] - eta));
        if r >= 1 {
            w *= v[r - 1] / lambda;
        }
    }
    compensated_sum(terms)
}

/// Closed-form G(1..N).
pub fn realization_factors_closed_form(params: &SystemParams, policy: &Policy, eta: f64) -> Result<RealizationFactors> {
    let rw = reward_structure(params, policy)?;
    let v = params.down_rates(policy);
    let g_diff = (1..=params.n()).map(|i| closed_form_terms(params.lambda, &v, &rw.f_values, eta, i)).collect();
    Ok(RealizationFactors { g_diff, offset_b: params.offset_b() })
}

/// Error amplification of the forward sweep / closed form at each G(i):
/// max_{r < i} pi(r) / pi(i-1). Values near 1 mean the explicit formula is
/// as accurate as the stable routes; large values mean it is not.
pub fn forward_amplification(params: &SystemParams, policy: &Policy) -> Result<Vec<f64>> {
    let st = stationary_distribution(params, policy)?;
    let mut best = 0.0f64;
    Ok((1..=params.n())
        .map(|i| {
            best = best.max(st.pi[i - 1]);
            best / st.pi[i - 1]
        })
        .collect())
}
