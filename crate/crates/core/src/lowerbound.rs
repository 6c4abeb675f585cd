//! Lower-bound machinery for nonexistence: the recursion
//! `a_1 = c_1`, `a_{k+1} = c_2 a_k^p (p - 1)/(p^k - 1)`, its envelopes
//! `f_k`, and the `w` functional of a computed solution.
//!
//! `a_k` decays doubly exponentially, so it is only ever held as `ln a_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_at, KernelTable};
use crate::measure::MeasureData;
use crate::picard::{EvolutionState, Solver};
use crate::quadrature::tanh_sinh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionRun {
    pub c1: f64,
    pub c2: f64,
    pub p: f64,
    /// `ln a_k` for `k = 1..=K`.
    pub ln_a: Vec<f64>,
    /// `b_k = -p^{-k} ln a_k`.
    pub b: Vec<f64>,
    /// `min_k a_k^{p^{-k}} = exp(-max_k b_k)`.
    pub beta: f64,
}

impl RecursionRun {
    pub fn len(&self) -> usize {
        self.ln_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_a.is_empty()
    }

    /// `a_k`, which may underflow to zero for large `k`.
    pub fn a(&self, k: usize) -> f64 {
        self.ln_a[k - 1].exp()
    }

    /// CSV with columns `k,a_k,b_k`; `a_k` is written as its logarithm's
    /// exponential in scientific notation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,a_k,b_k\n");
        for (i, (la, b)) in self.ln_a.iter().zip(&self.b).enumerate() {
            out.push_str(&format!("{},{:e},{:e}\n", i + 1, la.exp(), b));
        }
        out
    }
}

/// `ln(p^k - 1)` without forming `p^k`.
fn ln_pk_minus_one(p: f64, k: usize) -> f64 {
    let kl = k as f64 * p.ln();
    kl + (-(-kl).exp()).ln_1p()
}

pub fn a_sequence(c1: f64, c2: f64, p: f64, k_max: usize) -> Result<RecursionRun> {
    if !(c1 > 0.0 && c2 > 0.0) || !c1.is_finite() || !c2.is_finite() {
        return Err(Error::Invalid("c1 and c2 must be positive".into()));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Invalid(format!("p = {p} must exceed 1")));
    }
    if k_max < 2 {
        return Err(Error::Invalid("the run needs K >= 2".into()));
    }
    let mut ln_a = Vec::with_capacity(k_max);
    ln_a.push(c1.ln());
    for k in 1..k_max {
        let prev = ln_a[k - 1];
        ln_a.push(c2.ln() + p * prev + (p - 1.0).ln() - ln_pk_minus_one(p, k));
    }
    let b: Vec<f64> = ln_a
        .iter()
        .enumerate()
        .map(|(i, la)| -la * (-((i + 1) as f64) * p.ln()).exp())
        .collect();
    let bmax = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RecursionRun {
        c1,
        c2,
        p,
        ln_a,
        b,
        beta: (-bmax).exp(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BBoundReport {
    pub sup_b: f64,
    /// `max_k (b_{k+1} - b_k) / (p^{-k-1} (k + 1))`.
    pub fitted_c: f64,
    /// `|b_K - b_{K-1}|`.
    pub tail_increment: f64,
    /// First `k` from which every later `|b_{k+1} - b_k|` is below `1e-10`.
    pub settled_at: Option<usize>,
    /// Largest deviation of the increments from
    /// `p^{-k-1} ln((p^k - 1)/(c_2 (p - 1)))`.
    pub increment_identity_error: f64,
    pub bounded: bool,
}

pub fn b_bound_check(run: &RecursionRun) -> BBoundReport {
    let p = run.p;
    let mut fitted: f64 = 0.0;
    let mut ident: f64 = 0.0;
    let mut settled = None;
    for k in 1..run.len() {
        let inc = run.b[k] - run.b[k - 1];
        let w = (-((k + 1) as f64) * p.ln()).exp();
        fitted = fitted.max(inc / (w * (k + 1) as f64));
        let exact = w * (ln_pk_minus_one(p, k) - (run.c2 * (p - 1.0)).ln());
        ident = ident.max((inc - exact).abs());
        if inc.abs() >= 1e-10 {
            settled = None;
        } else if settled.is_none() {
            settled = Some(k);
        }
    }
    let n = run.len();
    let sup_b = run.b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    BBoundReport {
        sup_b,
        fitted_c: fitted,
        tail_increment: (run.b[n - 1] - run.b[n - 2]).abs(),
        settled_at: settled,
        increment_identity_error: ident,
        bounded: sup_b.is_finite() && fitted.is_finite(),
    }
}

/// `ln f_k(t)` with `f_k = a_k m^{p^{k-1}} t^{-N/theta} [ln(t/rho^theta)]^{(p^{k-1}-1)/(p-1)}`.
pub fn ln_f_envelope(
    run: &RecursionRun,
    mu_ball: f64,
    rho: f64,
    theta: f64,
    dim: usize,
    t: f64,
    k: usize,
) -> Result<f64> {
    if k == 0 || k > run.len() {
        return Err(Error::Invalid(format!(
            "k = {k} outside the run 1..={}",
            run.len()
        )));
    }
    if !(mu_ball >= 0.0) || !(rho > 0.0) || !(t > 0.0) {
        return Err(Error::Invalid("need mu_ball >= 0, rho > 0, t > 0".into()));
    }
    let p = run.p;
    let pk1 = (k as f64 - 1.0) * p.ln();
    let log_exp = (pk1.exp() - 1.0) / (p - 1.0);
    let ratio = t / rho.powf(theta);
    if k >= 2 && ratio <= 1.0 {
        return Err(Error::Domain(format!(
            "t = {t} must exceed rho^theta = {}",
            rho.powf(theta)
        )));
    }
    let log_term = if log_exp == 0.0 {
        0.0
    } else {
        log_exp * ratio.ln().ln()
    };
    Ok(run.ln_a[k - 1] + pk1.exp() * mu_ball.ln() - dim as f64 / theta * t.ln() + log_term)
}

pub fn f_envelope(
    run: &RecursionRun,
    mu_ball: f64,
    rho: f64,
    theta: f64,
    dim: usize,
    t: f64,
    k: usize,
) -> Result<f64> {
    Ok(ln_f_envelope(run, mu_ball, rho, theta, dim, t, k)?.exp())
}

/// Quadrature of `c_2 t^{-N/theta} int_{rho^theta}^t s^{N/theta - gamma/theta} f_k(s)^p ds`
/// next to `f_{k+1}(t)`; returns `(quadrature, f_{k+1}(t))`.
#[allow(clippy::too_many_arguments)]
pub fn induction_step(
    run: &RecursionRun,
    mu_ball: f64,
    rho: f64,
    theta: f64,
    dim: usize,
    gamma: f64,
    t: f64,
    k: usize,
) -> Result<(f64, f64)> {
    if k + 1 > run.len() {
        return Err(Error::Invalid("run too short for the step".into()));
    }
    let n = dim as f64;
    let lo = rho.powf(theta);
    let ln_next = ln_f_envelope(run, mu_ball, rho, theta, dim, t, k + 1)?;
    // work relative to f_{k+1}(t) so the integrand stays O(1)
    let integrand = |s: f64| -> f64 {
        if s <= lo {
            return 0.0;
        }
        let lf = ln_f_envelope(run, mu_ball, rho, theta, dim, s, k).unwrap_or(f64::NEG_INFINITY);
        ((n - gamma) / theta * s.ln() + run.p * lf - ln_next).exp()
    };
    let est = tanh_sinh(|s, _, _| integrand(s), lo, t, 1e-12)?;
    let quad = run.c2 * t.powf(-n / theta) * est.value * ln_next.exp();
    Ok((quad, ln_next.exp()))
}

/// `[log(T / (5 rho^theta))]^{-1/(p-1)}`.
pub fn nonexistence_mass_bound(horizon: f64, rho: f64, theta: f64, p: f64) -> Result<f64> {
    if !(p > 1.0) || !(rho > 0.0) || !(theta > 0.0) {
        return Err(Error::Invalid("need p > 1, rho > 0, theta > 0".into()));
    }
    let q = horizon / (5.0 * rho.powf(theta));
    if !(q > 1.0) {
        return Err(Error::Domain(format!(
            "need 5 rho^theta < T, got 5 rho^theta = {}",
            5.0 * rho.powf(theta)
        )));
    }
    Ok(q.ln().powf(-1.0 / (p - 1.0)))
}

/// `w = int G(x, t) u(x + z, t + offset) dx` by the grid sum over nodes `x`.
pub fn w_functional(
    state: &EvolutionState,
    table: &KernelTable,
    z: &[f64],
    t: f64,
    offset: f64,
) -> Result<f64> {
    let u = state.at(t + offset)?;
    let g = u.grid();
    if z.len() != g.dim || table.spec.dim != g.dim {
        return Err(Error::Invalid("dimension mismatch in w functional".into()));
    }
    let mut sum = 0.0;
    let mut y = vec![0.0; g.dim];
    for k in 0..g.len() {
        let x = g.point(k);
        for i in 0..g.dim {
            y[i] = x[i] + z[i];
        }
        let v = u.interpolate(&y);
        if v != 0.0 {
            sum += kernel_at(table, &x, t)? * v;
        }
    }
    Ok(sum * g.cell_volume())
}

/// `inf_{|x| <= 3 rho} u(x + z, (2 rho)^theta) / [G(x, rho^theta) mu(B(z, rho))]`.
pub fn lemma31_probe(
    state: &EvolutionState,
    table: &KernelTable,
    mu: &MeasureData,
    z: &[f64],
    rho: f64,
) -> Result<f64> {
    let theta = table.spec.theta;
    let t_probe = (2.0 * rho).powf(theta);
    if !(rho > 0.0) || t_probe >= state.problem.horizon {
        return Err(Error::Hypothesis(format!(
            "need (2 rho)^theta < T, got {t_probe} >= {}",
            state.problem.horizon
        )));
    }
    let m = mu.ball_measure(z, rho)?;
    if m == 0.0 {
        return Err(Error::Undefined("mu(B(z, rho)) = 0".into()));
    }
    let u = state.at(t_probe)?;
    let g = u.grid();
    let s = rho.powf(theta);
    let mut worst = f64::INFINITY;
    let mut y = vec![0.0; g.dim];
    for k in 0..g.len() {
        let x = g.point(k);
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() > 3.0 * rho {
            continue;
        }
        for i in 0..g.dim {
            y[i] = x[i] + z[i];
        }
        let ratio = u.interpolate(&y) / (kernel_at(table, &x, s)? * m);
        worst = worst.min(ratio);
    }
    if !worst.is_finite() {
        return Err(Error::Undefined("no grid node within 3 rho".into()));
    }
    if !(worst > 0.0) {
        return Err(Error::Numerical(format!(
            "lower bound ratio {worst} is not positive"
        )));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub c1: f64,
    pub c2: f64,
    /// Node times `t` with the values `w(t)`.
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    /// `min_{t, k} w(t) / f_k(t)`.
    pub min_ratio: f64,
}

/// Fits `c_1` from the first Picard iterate `S(t) mu` and `c_2` from the
/// Duhamel increment of the second, then checks `w >= f_k` for the
/// converged `state` and `k <= k_max`. The envelopes carry the log factor
/// of the critical case, so `p` must equal `p_gamma`.
pub fn envelope_check(
    solver: &Solver,
    state: &EvolutionState,
    mu: &MeasureData,
    z: &[f64],
    rho: f64,
    k_max: usize,
) -> Result<EnvelopeReport> {
    let pr = state.problem;
    if (pr.p - pr.p_gamma()).abs() > 1e-12 * pr.p {
        return Err(Error::Hypothesis(format!(
            "envelopes need p = p_gamma = {}",
            pr.p_gamma()
        )));
    }
    if state.time_nodes != solver.time_nodes() || state.problem != solver.problem {
        return Err(Error::Invalid(
            "state and solver disagree on problem or time nodes".into(),
        ));
    }
    let (theta, n) = (pr.theta, pr.dim as f64);
    let offset = (2.0 * rho).powf(theta);
    let lo = rho.powf(theta);
    let m = mu.ball_measure(z, rho)?;
    if m == 0.0 {
        return Err(Error::Undefined("mu(B(z, rho)) = 0".into()));
    }
    let times: Vec<f64> = state.time_nodes[1..]
        .iter()
        .copied()
        .filter(|t| *t > lo * (1.0 + 1e-9) && state.at(t + offset).is_ok())
        .collect();
    if times.is_empty() {
        return Err(Error::Hypothesis(
            "no node t with rho^theta < t, t + (2 rho)^theta <= T".into(),
        ));
    }
    let table = solver.table();
    let linear = solver.linear_part(mu)?;
    let first = solver.initial_state(&linear);
    let (second, _) = solver.duhamel_update(&first, &linear)?;
    let ws = |st: &EvolutionState| -> Result<Vec<f64>> {
        times
            .iter()
            .map(|t| w_functional(st, table, z, *t, offset))
            .collect()
    };
    let (w1, w2, w) = (ws(&first)?, ws(&second)?, ws(state)?);
    let c1 = times
        .iter()
        .zip(&w1)
        .map(|(t, w)| w * t.powf(n / theta) / m)
        .fold(f64::INFINITY, f64::min);
    let c2 = times
        .iter()
        .zip(w1.iter().zip(&w2))
        .map(|(t, (a, b))| (b - a) * t.powf(n / theta) / ((c1 * m).powf(pr.p) * (t / lo).ln()))
        .fold(f64::INFINITY, f64::min);
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::Numerical(format!(
            "fitted constants c1 = {c1}, c2 = {c2} are not positive"
        )));
    }
    let run = a_sequence(c1, c2, pr.p, k_max.max(2))?;
    let mut min_ratio = f64::INFINITY;
    for (t, wv) in times.iter().zip(&w) {
        for k in 1..=k_max {
            let lf = ln_f_envelope(&run, m, rho, theta, pr.dim, *t, k)?;
            min_ratio = min_ratio.min((wv.ln() - lf).exp());
        }
    }
    Ok(EnvelopeReport {
        c1,
        c2,
        times,
        w,
        min_ratio,
    })
}
