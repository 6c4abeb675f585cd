//! Solvability statistics on initial data.
//!
//! Every statistic is a ratio indexed by a decreasing radius grid `sigma`.
//! Boundedness is judged by a least-squares slope of `ln(statistic)`
//! against `ln(sigma)`, or against `-ln ln(e + T^{1/theta}/sigma)` for the
//! logarithmic criteria, so that a negative slope always means growth as
//! `sigma -> 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::kernel::{
    ball_volume, kernel_moment_direct, shared_table, shifted_moment, KernelSpec, KernelTable,
};
use crate::measure::{ball_average_power, MeasureData};
use crate::picard::{Solver, SolverConfig};
use crate::problem::Problem;
use crate::semigroup::{apply_to_measure_with, propagate};

/// Slopes below this count as divergence.
pub const DIVERGENCE_SLOPE: f64 = -0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum StatVerdict {
    BoundedBy { c_emp: f64 },
    DivergesLike { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionStatistic {
    pub sigmas: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub verdict: StatVerdict,
}

impl CriterionStatistic {
    fn from_values(
        sigmas: Vec<f64>,
        values: Vec<f64>,
        abscissa: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "statistic value {v} is not finite and nonnegative"
            )));
        }
        let pts: Vec<(f64, f64)> = sigmas
            .iter()
            .zip(&values)
            .filter(|(_, v)| **v > 0.0)
            .map(|(s, v)| (abscissa(*s), v.ln()))
            .collect();
        let slope = fit_slope(&pts);
        let c_emp = values.iter().fold(0.0, |m: f64, v| m.max(*v));
        let verdict = if slope < DIVERGENCE_SLOPE {
            StatVerdict::DivergesLike { rate: slope }
        } else {
            StatVerdict::BoundedBy { c_emp }
        };
        Ok(Self {
            sigmas,
            values,
            slope,
            verdict,
        })
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.verdict, StatVerdict::BoundedBy { .. })
    }

    /// `sigma,statistic` rows in the order of the grid.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma,statistic\n");
        for (s, v) in self.sigmas.iter().zip(&self.values) {
            out.push_str(&format!("{s:e},{v:e}\n"));
        }
        out
    }

    /// JSON sidecar `{verdict, slope, c_emp}`.
    pub fn verdict_json(&self) -> serde_json::Value {
        let (name, c) = match self.verdict {
            StatVerdict::BoundedBy { c_emp } => ("BoundedBy", Some(c_emp)),
            StatVerdict::DivergesLike { .. } => ("DivergesLike", None),
        };
        serde_json::json!({"verdict": name, "slope": self.slope, "c_emp": c})
    }
}

/// Least-squares slope; zero with fewer than two points.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// `(p_0, p_gamma) = (1 + theta/N, 1 + (theta - gamma)/N)`; `gamma = 0` is allowed.
pub fn critical_exponents(dim: usize, theta: f64, gamma: f64) -> Result<(f64, f64)> {
    KernelSpec::new(dim, theta)?;
    let n = dim as f64;
    if !(gamma >= 0.0) || gamma >= theta.min(n) {
        return Err(Error::Invalid(format!(
            "standing assumption 0 < gamma < min(theta, N) violated: gamma = {gamma}"
        )));
    }
    Ok((1.0 + theta / n, 1.0 + (theta - gamma) / n))
}

/// Log-spaced decreasing grid from `hi` to `lo`.
pub fn log_grid(hi: f64, lo: f64, points: usize) -> Result<Vec<f64>> {
    if !(hi > lo && lo > 0.0) || points < 2 {
        return Err(Error::Invalid(
            "sigma grid needs hi > lo > 0 and >= 2 points".into(),
        ));
    }
    let r = (lo / hi).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| hi * (r * i as f64).exp()).collect())
}

/// One decade below `0.9 T^{1/theta}` in 9 points.
pub fn default_sigmas(problem: &Problem) -> Vec<f64> {
    let l = problem.length_scale();
    log_grid(0.9 * l, 0.09 * l, 9).expect("valid default grid")
}

/// Origin plus ring points at `|z| = T^{1/theta}/2` and `2 T^{1/theta}`.
pub fn default_z_set(problem: &Problem) -> Vec<Vec<f64>> {
    let l = problem.length_scale();
    let mut out = vec![vec![0.0; problem.dim]];
    for r in [0.5 * l, 2.0 * l] {
        if problem.dim == 1 {
            out.push(vec![r]);
            out.push(vec![-r]);
        } else {
            for (x, y) in [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)] {
                out.push(vec![r * x, r * y]);
            }
        }
    }
    out
}

fn check_sigmas(problem: &Problem, sigmas: &[f64]) -> Result<()> {
    let l = problem.length_scale();
    if sigmas.is_empty() {
        return Err(Error::Invalid("empty sigma grid".into()));
    }
    if sigmas.iter().any(|s| !(*s > 0.0 && *s < l)) {
        return Err(Error::Invalid(format!(
            "sigma must lie in (0, T^(1/theta)) = (0, {l})"
        )));
    }
    if sigmas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid(
            "sigma grid must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn check_measure(mu: &MeasureData, problem: &Problem) -> Result<()> {
    if mu.dim != problem.dim {
        return Err(Error::Invalid(
            "measure and problem dimensions differ".into(),
        ));
    }
    Ok(())
}

/// `sup_z mu(B(z,sigma)) / avg_{B(z,sigma)} |x|^{gamma/(p-1)}`, over `sigma^{N - theta/(p-1)}`.
pub fn necessary_subcritical_stat(
    mu: &MeasureData,
    problem: &Problem,
    z_set: &[Vec<f64>],
    sigmas: &[f64],
) -> Result<CriterionStatistic> {
    problem.validate()?;
    check_measure(mu, problem)?;
    check_sigmas(problem, sigmas)?;
    if z_set.is_empty() {
        return Err(Error::Invalid("empty z set".into()));
    }
    let n = problem.dim as f64;
    let a = problem.gamma / (problem.p - 1.0);
    let power = n - problem.theta / (problem.p - 1.0);
    let values = sigmas
        .par_iter()
        .map(|&s| {
            let mut best: f64 = 0.0;
            for z in z_set {
                let ratio = mu.ball_measure(z, s)? / ball_average_power(z, s, a, problem.dim)?;
                best = best.max(ratio);
            }
            Ok(best / s.powf(power))
        })
        .collect::<Result<Vec<f64>>>()?;
    CriterionStatistic::from_values(sigmas.to_vec(), values, f64::ln)
}

fn log_abscissa(l: f64) -> impl Fn(f64) -> f64 {
    move |s: f64| -(E + l / s).ln().ln()
}

/// `mu(B(0,sigma)) [log(e + T^{1/theta}/sigma)]^{N/(theta-gamma)}` at `p = p_gamma`.
pub fn necessary_critical_stat(
    mu: &MeasureData,
    problem: &Problem,
    sigmas: &[f64],
) -> Result<CriterionStatistic> {
    problem.validate()?;
    check_measure(mu, problem)?;
    check_sigmas(problem, sigmas)?;
    if (problem.p - problem.p_gamma()).abs() > 1e-12 {
        return Err(Error::Hypothesis(format!(
            "criterion applies only at p = p_gamma = {}, got p = {}",
            problem.p_gamma(),
            problem.p
        )));
    }
    let l = problem.length_scale();
    let k = problem.dim as f64 / (problem.theta - problem.gamma);
    let origin = vec![0.0; problem.dim];
    let values = sigmas
        .iter()
        .map(|&s| Ok(mu.ball_measure(&origin, s)? * (E + l / s).ln().powf(k)))
        .collect::<Result<Vec<f64>>>()?;
    CriterionStatistic::from_values(sigmas.to_vec(), values, log_abscissa(l))
}

/// `mu(B(z,sigma)) |z|^{-gamma/(p-1)} [log(e + T^{1/theta}/sigma)]^{N/theta}` at `p = p_0`.
pub fn necessary_offorigin_stat(
    mu: &MeasureData,
    problem: &Problem,
    z: &[f64],
    sigmas: &[f64],
) -> Result<CriterionStatistic> {
    problem.validate()?;
    check_measure(mu, problem)?;
    check_sigmas(problem, sigmas)?;
    if (problem.p - problem.p0()).abs() > 1e-12 {
        return Err(Error::Hypothesis(format!(
            "criterion applies only at p = p_0 = {}, got p = {}",
            problem.p0(),
            problem.p
        )));
    }
    let l = problem.length_scale();
    let dz = norm(z);
    if z.len() != problem.dim || dz <= l {
        return Err(Error::Hypothesis(format!(
            "requires |z| > T^(1/theta) = {l}, got |z| = {dz}"
        )));
    }
    let weight = dz.powf(-problem.gamma / (problem.p - 1.0));
    let k = problem.dim as f64 / problem.theta;
    let values = sigmas
        .iter()
        .map(|&s| Ok(mu.ball_measure(z, s)? * weight * (E + l / s).ln().powf(k)))
        .collect::<Result<Vec<f64>>>()?;
    CriterionStatistic::from_values(sigmas.to_vec(), values, log_abscissa(l))
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(N(p-1)/(theta-gamma) - eps, N(p-1)/(theta-gamma))`.
pub fn exponent_window(problem: &Problem, epsilon: f64) -> Result<(f64, f64)> {
    problem.validate()?;
    if problem.p <= problem.p_gamma() {
        return Err(Error::Hypothesis(
            "exponent window needs p > p_gamma".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Invalid(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    let hi = problem.dim as f64 * (problem.p - 1.0) / (problem.theta - problem.gamma);
    let lo = hi - epsilon;
    if lo <= 1.0 {
        return Err(Error::Invalid(format!(
            "epsilon = {epsilon} too large: window starts at {lo} <= 1"
        )));
    }
    Ok((lo, hi))
}

fn check_r(problem: &Problem, r: f64) -> Result<()> {
    let hi = problem.dim as f64 * (problem.p - 1.0) / (problem.theta - problem.gamma);
    if !(r > 1.0 && r < hi) {
        return Err(Error::Hypothesis(format!(
            "r = {r} must lie in (1, N(p-1)/(theta-gamma)) = (1, {hi})"
        )));
    }
    Ok(())
}

/// `sup_z (avg_{B(z,sigma)} mu^r)^{1/r} sigma^{(theta-gamma)/(p-1)}`.
pub fn sufficient_condition_stat(
    mu: &MeasureData,
    problem: &Problem,
    r: f64,
    z_set: &[Vec<f64>],
    sigmas: &[f64],
) -> Result<CriterionStatistic> {
    problem.validate()?;
    check_measure(mu, problem)?;
    check_sigmas(problem, sigmas)?;
    if problem.p <= problem.p_gamma() {
        return Err(Error::Hypothesis(
            "sufficiency statistic needs p > p_gamma".into(),
        ));
    }
    check_r(problem, r)?;
    if mu.has_atoms() {
        return Err(Error::Undefined("r-average undefined for atoms".into()));
    }
    if z_set.is_empty() {
        return Err(Error::Invalid("empty z set".into()));
    }
    let powered = match &mu.density {
        Some(d) => Some(d.powered(r)?),
        None => None,
    };
    let exponent = (problem.theta - problem.gamma) / (problem.p - 1.0);
    let vol = ball_volume(problem.dim);
    let values = sigmas
        .par_iter()
        .map(|&s| {
            let Some(d) = &powered else { return 0.0 };
            let best = z_set
                .iter()
                .map(|z| d.ball_measure(z, s) / (vol * s.powi(problem.dim as i32)))
                .fold(0.0f64, f64::max);
            best.powf(1.0 / r) * s.powf(exponent)
        })
        .collect::<Vec<f64>>();
    CriterionStatistic::from_values(sigmas.to_vec(), values, f64::ln)
}

/// Exponents of the supersolution `W = S(t) mu + t^E (S(t) mu^r)^{1/(r alpha')}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionParams {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub rho_exponent: f64,
    pub e51: f64,
    pub e52: f64,
}

/// Accepted `alpha` range `(max(1, 0.8 N/gamma), N/gamma)`.
pub fn alpha_range(problem: &Problem) -> (f64, f64) {
    let top = problem.dim as f64 / problem.gamma;
    ((0.8 * top).max(1.0), top)
}

pub fn supersolution_exponents(problem: &Problem, alpha: f64) -> Result<SupersolutionParams> {
    problem.validate()?;
    let (lo, hi) = alpha_range(problem);
    if !(alpha > lo && alpha < hi) {
        return Err(Error::Hypothesis(format!(
            "alpha = {alpha} outside the accepted range ({lo}, {hi})"
        )));
    }
    let (theta, gamma, p) = (problem.theta, problem.gamma, problem.p);
    let ap = alpha / (alpha - 1.0);
    let q = (theta - gamma) / theta;
    let shift = (p - 1.0 / ap) / (p - 1.0);
    let e51 = 1.0 - q * shift;
    let e52 = 1.0 + q * p * (1.0 - shift) - q / ap;
    let rho_exponent = 1.0 - gamma / theta - q * shift;
    if !(e51 > 0.0 && e52 > 0.0) {
        return Err(Error::Hypothesis(format!(
            "construction hypotheses violated: e51 = {e51}, e52 = {e52}"
        )));
    }
    Ok(SupersolutionParams {
        alpha,
        alpha_prime: ap,
        rho_exponent,
        e51,
        e52,
    })
}

fn check_density(mu: &MeasureData) -> Result<()> {
    if mu.has_atoms() {
        return Err(Error::Undefined(
            "the supersolution needs a density datum".into(),
        ));
    }
    Ok(())
}

/// `W(t)` on `grid`.
pub fn build_supersolution(
    mu: &MeasureData,
    params: &SupersolutionParams,
    r: f64,
    t: f64,
    table: &KernelTable,
    grid: &Grid,
) -> Result<Field> {
    check_density(mu)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "supersolution time t = {t} must lie in (0, 1)"
        )));
    }
    if !(r > 1.0) {
        return Err(Error::Invalid(format!("r = {r} must exceed 1")));
    }
    let how = crate::semigroup::Propagator::CellKernel;
    let linear = apply_to_measure_with(mu, table, t, grid, how)?;
    let Some(d) = &mu.density else {
        return Ok(linear);
    };
    let powered = propagate(&d.powered(r)?.to_field(grid)?, table, t, how)?;
    let rho = t.powf(params.rho_exponent);
    let k = 1.0 / (r * params.alpha_prime);
    let values = linear
        .values()
        .iter()
        .zip(powered.values())
        .map(|(a, b)| a + rho * b.powf(k))
        .collect();
    Field::new(*grid, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    pub samples: Vec<f64>,
    /// `min_x R(x, t)` per sample.
    pub min_residual: Vec<f64>,
    /// `max |W|` over the samples.
    pub w_sup: f64,
    /// Smallest residual over every node, not just the samples.
    pub min_residual_all_nodes: f64,
    pub passes: bool,
}

/// Residual `R = W - S(t) mu - sum dt S(t - s) V W(s)^p` with the solver quadrature.
/// Samples must be solver nodes in `(0, 1)`.
pub fn verify_supersolution(
    mu: &MeasureData,
    params: &SupersolutionParams,
    r: f64,
    problem: &Problem,
    grid: &Grid,
    cfg: &SolverConfig,
    samples: &[f64],
) -> Result<SupersolutionReport> {
    check_density(mu)?;
    if problem.horizon >= 1.0 {
        return Err(Error::Domain(
            "the supersolution is built for horizons T < 1".into(),
        ));
    }
    let solver = Solver::new(*problem, *grid, *cfg)?;
    let nodes = solver.time_nodes().to_vec();
    let idx = samples
        .iter()
        .map(|t| {
            nodes[1..]
                .iter()
                .position(|s| (s - t).abs() <= 1e-12 * s.max(1.0))
                .ok_or(Error::NodeMismatch(*t))
        })
        .collect::<Result<Vec<usize>>>()?;
    let w = nodes[1..]
        .iter()
        .map(|t| build_supersolution(mu, params, r, *t, solver.table(), grid))
        .collect::<Result<Vec<Field>>>()?;
    let linear = solver.linear_part(mu)?;
    let duhamel = solver.duhamel_integral(&w)?;
    let residual: Vec<f64> = w
        .iter()
        .zip(&linear)
        .zip(&duhamel)
        .map(|((w, l), d)| {
            w.values()
                .iter()
                .zip(l.values())
                .zip(d.values())
                .map(|((w, l), d)| w - l - d)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let min_residual: Vec<f64> = idx.iter().map(|&j| residual[j]).collect();
    let w_sup = idx.iter().map(|&j| w[j].sup_norm()).fold(0.0, f64::max);
    let worst = min_residual.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SupersolutionReport {
        samples: samples.to_vec(),
        passes: worst >= -1e-6 * w_sup,
        min_residual,
        w_sup,
        min_residual_all_nodes: residual.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// `max_s shifted_moment(gamma/(p-1), z, s) / [rho^{-N} int_{B(z,rho)} |y|^{gamma/(p-1)} dy]`.
pub fn lemma41_check(problem: &Problem, z: &[f64], rho: f64, s_grid: &[f64]) -> Result<f64> {
    problem.validate()?;
    let l = problem.length_scale();
    if z.len() != problem.dim || norm(z) <= l {
        return Err(Error::Hypothesis(format!(
            "requires |z| > T^(1/theta) = {l}"
        )));
    }
    if !(rho > 0.0) || s_grid.is_empty() {
        return Err(Error::Invalid("need rho > 0 and a nonempty s grid".into()));
    }
    let lo = rho.powf(problem.theta);
    if let Some(s) = s_grid
        .iter()
        .find(|s| !(**s > lo && **s < problem.horizon / 3.0))
    {
        return Err(Error::Hypothesis(format!(
            "s = {s} outside (rho^theta, T/3) = ({lo}, {})",
            problem.horizon / 3.0
        )));
    }
    let table = shared_table(&problem.spec()?)?;
    let a = problem.gamma / (problem.p - 1.0);
    let denom = ball_volume(problem.dim) * ball_average_power(z, rho, a, problem.dim)?;
    let mut worst: f64 = 0.0;
    for &s in s_grid {
        worst = worst.max(shifted_moment(&table, a, z, s)? / denom);
    }
    if !worst.is_finite() {
        return Err(Error::Numerical(
            "shifted-moment ratio is not finite".into(),
        ));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentBoundReport {
    pub exponent: f64,
    pub s_grid: Vec<f64>,
    /// `M_a(s) s^{-a/theta}` by direct quadrature.
    pub scaled: Vec<f64>,
    pub constant: f64,
    pub spread: f64,
    pub passes: bool,
}

/// Constancy of `M_{gamma/(p-1)}(s) s^{-gamma/(theta(p-1))}` over `s_grid`.
pub fn moment_bound_check(problem: &Problem, s_grid: &[f64]) -> Result<MomentBoundReport> {
    problem.validate()?;
    if s_grid.is_empty() {
        return Err(Error::Invalid("empty s grid".into()));
    }
    let table = shared_table(&problem.spec()?)?;
    let a = problem.gamma / (problem.p - 1.0);
    let scaled = s_grid
        .iter()
        .map(|&s| Ok(kernel_moment_direct(&table, a, s)? * s.powf(-a / problem.theta)))
        .collect::<Result<Vec<f64>>>()?;
    let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
    let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
    let constant = scaled.iter().sum::<f64>() / scaled.len() as f64;
    let spread = (hi - lo) / constant;
    Ok(MomentBoundReport {
        exponent: a,
        s_grid: s_grid.to_vec(),
        scaled,
        constant,
        spread,
        passes: spread <= 1e-3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Density, RadialLaw};
    use approx::assert_relative_eq;

    fn prob() -> Problem {
        Problem::new(1, 2.0, 0.5, 3.0, 0.5).unwrap()
    }

    fn power(c: f64, a: f64) -> MeasureData {
        MeasureData::from_density(Density::Profile(
            RadialLaw::new(1, c, a, 0.0, 5.0, &[0.0]).unwrap(),
        ))
    }

    fn origin() -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }

    #[test]
    fn exponents() {
        assert_eq!(critical_exponents(1, 2.0, 0.5).unwrap(), (3.0, 2.5));
        assert_eq!(critical_exponents(2, 1.5, 0.5).unwrap(), (1.75, 1.5));
        let (a, b) = critical_exponents(2, 1.0, 0.0).unwrap();
        assert_eq!(a, b);
        assert!(critical_exponents(1, 2.0, 1.0).is_err());
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 - 0.3 * i as f64)).collect();
        assert_relative_eq!(fit_slope(&pts), -0.3, epsilon = 1e-14);
        assert_eq!(fit_slope(&pts[..1]), 0.0);
    }

    #[test]
    fn borderline_power_is_flat() {
        let sig = log_grid(0.5, 0.005, 10).unwrap();
        let c = 0.3;
        let st = necessary_subcritical_stat(&power(c, 0.75), &prob(), &origin(), &sig).unwrap();
        for v in &st.values {
            assert_relative_eq!(*v, 10.0 * c, max_relative = 1e-10);
        }
        assert!(st.is_bounded());
        assert!(st.slope.abs() < 1e-9);
    }

    #[test]
    fn dirac_diverges_with_rate() {
        let sig = log_grid(0.5, 0.01, 9).unwrap();
        let d = MeasureData::dirac(1, &[0.0], 1.0).unwrap();
        let st = necessary_subcritical_stat(&d, &prob(), &origin(), &sig).unwrap();
        assert_relative_eq!(
            *st.values.last().unwrap(),
            1.25 * 0.01f64.powf(-0.25),
            max_relative = 1e-12
        );
        assert_relative_eq!(st.slope, -0.25, epsilon = 1e-12);
        assert!(matches!(st.verdict, StatVerdict::DivergesLike { .. }));
        let z =
            necessary_subcritical_stat(&MeasureData::zero(1), &prob(), &origin(), &sig).unwrap();
        assert_eq!(z.verdict, StatVerdict::BoundedBy { c_emp: 0.0 });
        assert!(necessary_subcritical_stat(&d, &prob(), &[], &sig).is_err());
    }

    #[test]
    fn default_z_set_probes_both_regimes() {
        let z = default_z_set(&prob());
        assert_eq!(z.len(), 5);
        let p2 = Problem::new(2, 1.5, 0.5, 2.0, 1.0).unwrap();
        assert_eq!(default_z_set(&p2).len(), 9);
        let s = default_sigmas(&prob());
        assert!(s.len() >= 8 && s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn critical_log_criterion() {
        // p = p_gamma = 2.5 for (N, theta, gamma) = (1, 2, 0.5); log exponent N/(theta-gamma) = 2/3
        let p = Problem::new(1, 2.0, 0.5, 2.5, 1.0).unwrap();
        let k = 2.0 / 3.0;
        let sig = log_grid(0.5, 1e-4, 12).unwrap();
        let d = MeasureData::dirac(1, &[0.0], 2.0).unwrap();
        let st = necessary_critical_stat(&d, &p, &sig).unwrap();
        assert_relative_eq!(st.slope, -k, epsilon = 1e-12);
        assert_relative_eq!(
            st.values[0],
            2.0 * (E + 2.0).ln().powf(k),
            max_relative = 1e-12
        );
        assert!(!st.is_bounded());
        // C |x|^{-N} [log(e + 1/|x|)]^{-N/(theta-gamma)-1}
        let law = RadialLaw::new(1, 1.0, 1.0, k + 1.0, 5.0, &[0.0]).unwrap();
        let mu = MeasureData::from_density(Density::Profile(law));
        let st = necessary_critical_stat(&mu, &p, &sig).unwrap();
        assert!(st.is_bounded(), "{st:?}");
        let at = |s: f64| mu.ball_measure(&[0.0], s).unwrap() * (E + 1.0 / s).ln().powf(k);
        assert!((at(1e-3) / at(1e-4) - 1.0).abs() < 0.1);
        assert!(necessary_critical_stat(&mu, &prob(), &sig).is_err());
        let z = necessary_critical_stat(&MeasureData::zero(1), &p, &sig).unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn critical_log_criterion_in_the_plane() {
        // (N, theta, gamma) = (2, 2, 1): p_gamma = 1.5 and the profile log exponent is 3
        let p = Problem::new(2, 2.0, 1.0, 1.5, 1.0).unwrap();
        let sig = log_grid(0.5, 1e-4, 10).unwrap();
        let law = RadialLaw::new(2, 1.0, 2.0, 3.0, 5.0, &[0.0, 0.0]).unwrap();
        let mu = MeasureData::from_density(Density::Profile(law));
        assert!(necessary_critical_stat(&mu, &p, &sig).unwrap().is_bounded());
        let d = MeasureData::dirac(2, &[0.0, 0.0], 1.0).unwrap();
        assert!(!necessary_critical_stat(&d, &p, &sig).unwrap().is_bounded());
    }

    #[test]
    fn off_origin_criterion() {
        let p = Problem::new(1, 2.0, 0.5, 3.0, 1.0).unwrap();
        let sig = log_grid(0.5, 1e-4, 9).unwrap();
        let d = MeasureData::dirac(1, &[2.0], 1.5).unwrap();
        let st = necessary_offorigin_stat(&d, &p, &[2.0], &sig).unwrap();
        assert!(!st.is_bounded());
        assert_relative_eq!(
            st.values[0],
            1.5 * 2f64.powf(-0.25) * (E + 2.0).ln().sqrt(),
            max_relative = 1e-12
        );
        assert!(matches!(
            necessary_offorigin_stat(&d, &p, &[0.5], &sig),
            Err(Error::Hypothesis(_))
        ));
        let off = Problem::new(1, 2.0, 0.5, 2.8, 1.0).unwrap();
        assert!(necessary_offorigin_stat(&d, &off, &[2.0], &[0.1]).is_err());
    }

    #[test]
    fn sufficiency_on_power_profile() {
        let sig = log_grid(0.5, 0.005, 9).unwrap();
        let c = 0.01;
        let st = sufficient_condition_stat(&power(c, 0.75), &prob(), 1.2, &origin(), &sig).unwrap();
        for v in &st.values {
            assert_relative_eq!(*v, 10f64.powf(1.0 / 1.2) * c, max_relative = 1e-10);
        }
        let z = sufficient_condition_stat(&MeasureData::zero(1), &prob(), 1.2, &origin(), &sig)
            .unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
        let d = MeasureData::dirac(1, &[0.0], 1.0).unwrap();
        assert!(matches!(
            sufficient_condition_stat(&d, &prob(), 1.2, &origin(), &sig),
            Err(Error::Undefined(_))
        ));
        // bounded data: statistic <= M sigma^{(theta-gamma)/(p-1)}
        let flat = power(2.0, 0.0);
        let st =
            sufficient_condition_stat(&flat, &prob(), 1.2, &default_z_set(&prob()), &sig).unwrap();
        for (s, v) in st.sigmas.iter().zip(&st.values) {
            assert!(*v <= 2.0 * s.powf(0.75) * (1.0 + 1e-12));
        }
        assert!(st.slope > 0.7);
    }

    #[test]
    fn window() {
        let (lo, hi) = exponent_window(&prob(), 0.1).unwrap();
        assert_relative_eq!(lo, 1.2333333333333334, epsilon = 1e-12);
        assert_relative_eq!(hi, 4.0 / 3.0, epsilon = 1e-12);
        assert!(exponent_window(&prob(), 1.0).is_err());
        let below = Problem::new(1, 2.0, 0.5, 2.2, 0.5).unwrap();
        assert!(exponent_window(&below, 0.01).is_err());
    }

    #[test]
    fn supersolution_arithmetic() {
        let sp = supersolution_exponents(&prob(), 1.9).unwrap();
        assert_relative_eq!(sp.alpha_prime, 1.9 / 0.9, epsilon = 1e-14);
        assert_relative_eq!(sp.e51, 0.0526315789, epsilon = 1e-9);
        assert_relative_eq!(sp.e52, 0.0526315789, epsilon = 1e-9);
        assert_relative_eq!(sp.rho_exponent, -0.1973684211, epsilon = 1e-9);
        assert!(supersolution_exponents(&prob(), 2.5).is_err());
        assert!(supersolution_exponents(&prob(), 1.5).is_err());
    }

    #[test]
    fn supersolution_dominates_linear_part() {
        let table = shared_table(&KernelSpec::new(1, 2.0).unwrap()).unwrap();
        let g = Grid::new(1, 20.0, 256).unwrap();
        let sp = supersolution_exponents(&prob(), 1.9).unwrap();
        let z = build_supersolution(&MeasureData::zero(1), &sp, 1.2, 0.5, &table, &g).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let mu = power(0.01, 0.0);
        let w = build_supersolution(&mu, &sp, 1.2, 0.9, &table, &g).unwrap();
        let s = apply_to_measure_with(
            &mu,
            &table,
            0.9,
            &g,
            crate::semigroup::Propagator::CellKernel,
        )
        .unwrap();
        assert!(w.values().iter().zip(s.values()).all(|(a, b)| a >= b));
        assert!(build_supersolution(&mu, &sp, 1.2, 1.0, &table, &g).is_err());
    }

    #[test]
    fn supersolution_certificate() {
        let g = Grid::new(1, 20.0, 512).unwrap();
        let cfg = SolverConfig {
            time_nodes: 20,
            ..Default::default()
        };
        let sp = supersolution_exponents(&prob(), 1.9).unwrap();
        let samples = [0.1, 0.25, 0.5];
        let zero =
            verify_supersolution(&MeasureData::zero(1), &sp, 1.2, &prob(), &g, &cfg, &samples)
                .unwrap();
        assert!(zero.min_residual.iter().all(|r| *r == 0.0));
        let ok = verify_supersolution(&power(0.01, 0.75), &sp, 1.2, &prob(), &g, &cfg, &samples)
            .unwrap();
        assert!(ok.passes, "{ok:?}");
        let bad = verify_supersolution(&power(10.0, 0.75), &sp, 1.2, &prob(), &g, &cfg, &samples)
            .unwrap();
        assert!(!bad.passes, "{bad:?}");
        assert!(matches!(
            verify_supersolution(&power(0.01, 0.75), &sp, 1.2, &prob(), &g, &cfg, &[0.31]),
            Err(Error::NodeMismatch(_))
        ));
    }

    #[test]
    fn lemma41() {
        let p = prob();
        let l = p.length_scale();
        let rho = 0.05;
        let s: Vec<f64> = log_grid(0.16, 0.003, 6).unwrap();
        let v = lemma41_check(&p, &[2.0 * l], rho, &s).unwrap();
        assert!(v.is_finite() && v > 0.0);
        // concentration: small s gives a ratio near 1/|B(0,1)| = 0.5
        let far = lemma41_check(&p, &[10.0 * l], rho, &[0.0026]).unwrap();
        assert!((far - 0.5).abs() < 0.01, "{far}");
        assert!(matches!(
            lemma41_check(&p, &[0.5 * l], rho, &s),
            Err(Error::Hypothesis(_))
        ));
        assert!(lemma41_check(&p, &[2.0 * l], rho, &[0.2]).is_err());
    }

    #[test]
    fn moment_constancy() {
        let r = moment_bound_check(&prob(), &log_grid(1.0, 0.01, 5).unwrap()).unwrap();
        assert!(r.passes, "{r:?}");
        let table = shared_table(&KernelSpec::new(1, 2.0).unwrap()).unwrap();
        assert_relative_eq!(
            r.constant,
            table.unit_moment(0.25).unwrap(),
            max_relative = 1e-6
        );
        let p = Problem::new(1, 1.0, 0.5, 2.0, 1.0).unwrap();
        let r = moment_bound_check(&p, &log_grid(1.0, 0.01, 4).unwrap()).unwrap();
        assert_relative_eq!(r.constant, 2f64.sqrt(), max_relative = 1e-4);
        // a = gamma/(p-1) >= theta is ruled out by the problem assumptions
        assert!(Problem::new(1, 1.0, 0.5, 1.5, 1.0).is_err());
    }

    #[test]
    fn statistics_are_one_homogeneous() {
        let sig = log_grid(0.5, 0.01, 8).unwrap();
        let zs = default_z_set(&prob());
        let mu = power(0.2, 0.6);
        let lam = 3.7;
        let a = sufficient_condition_stat(&mu, &prob(), 1.2, &zs, &sig).unwrap();
        let b =
            sufficient_condition_stat(&mu.scaled(lam).unwrap(), &prob(), 1.2, &zs, &sig).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_relative_eq!(lam * x, *y, max_relative = 1e-12);
        }
        let a = necessary_subcritical_stat(&mu, &prob(), &zs, &sig).unwrap();
        let b = necessary_subcritical_stat(&mu.scaled(lam).unwrap(), &prob(), &zs, &sig).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_relative_eq!(lam * x, *y, max_relative = 1e-12);
        }
    }
}
