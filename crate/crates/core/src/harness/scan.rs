//! Amplitude threshold scans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid;
use crate::picard::{Solver, SolverConfig, Verdict};
use crate::problem::Problem;
use crate::profiles::ProfileSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanStep {
    /// 0 and 1 are the bracket endpoints, bisection steps follow.
    pub iter: usize,
    pub c_mid: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub problem: Problem,
    pub profile_kind: String,
    /// Largest amplitude seen to converge.
    pub c_low: f64,
    /// Smallest amplitude seen to blow up.
    pub c_high: f64,
    pub history: Vec<ScanStep>,
}

impl ScanResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,c_mid,verdict\n");
        for s in &self.history {
            out.push_str(&format!("{},{:e},{:?}\n", s.iter, s.c_mid, s.verdict));
        }
        out
    }
}

/// Bisection on `ln c` between a converging and a blowing-up amplitude.
pub fn scan_threshold(
    problem: &Problem,
    grid: &Grid,
    cfg: &SolverConfig,
    profile: &ProfileSpec,
    c_min: f64,
    c_max: f64,
    iters: usize,
) -> Result<ScanResult> {
    if !(c_min > 0.0 && c_max > c_min) || !c_max.is_finite() {
        return Err(Error::Invalid(format!(
            "bracket invalid: need 0 < c_min < c_max, got [{c_min}, {c_max}]"
        )));
    }
    let solver = Solver::new(*problem, *grid, *cfg)?;
    let verdict = |c: f64| -> Result<Verdict> {
        let mu = profile.with_amplitude(c).build(problem, grid.half_width)?;
        Ok(solver.solve(&mu)?.0.verdict)
    };
    let mut history = vec![];
    let lo_v = verdict(c_min)?;
    history.push(ScanStep {
        iter: 0,
        c_mid: c_min,
        verdict: lo_v,
    });
    if lo_v != Verdict::Converged {
        return Err(Error::Scan(format!(
            "bracket invalid: c_min = {c_min} gave {lo_v:?}, expected Converged"
        )));
    }
    let hi_v = verdict(c_max)?;
    history.push(ScanStep {
        iter: 1,
        c_mid: c_max,
        verdict: hi_v,
    });
    if hi_v != Verdict::BlowupProxy {
        return Err(Error::Scan(format!(
            "bracket invalid: c_max = {c_max} gave {hi_v:?}, expected BlowupProxy"
        )));
    }
    let (mut lo, mut hi) = (c_min, c_max);
    for i in 0..iters {
        let mid = (lo * hi).sqrt();
        let v = verdict(mid)?;
        history.push(ScanStep {
            iter: i + 2,
            c_mid: mid,
            verdict: v,
        });
        match v {
            Verdict::Converged => lo = mid,
            Verdict::BlowupProxy => hi = mid,
            Verdict::IterationBudgetExceeded => {
                return Err(Error::Scan(format!(
                    "inconclusive verdict at c = {mid} inside [{lo}, {hi}]; raise max_iter"
                )))
            }
        }
    }
    // every converged amplitude must sit below every blown-up one
    let max_conv = history
        .iter()
        .filter(|s| s.verdict == Verdict::Converged)
        .map(|s| s.c_mid)
        .fold(0.0, f64::max);
    let min_blow = history
        .iter()
        .filter(|s| s.verdict == Verdict::BlowupProxy)
        .map(|s| s.c_mid)
        .fold(f64::INFINITY, f64::min);
    if !(max_conv < min_blow) {
        return Err(Error::Scan(format!(
            "non-monotone verdicts: converged at {max_conv}, blow-up at {min_blow}"
        )));
    }
    Ok(ScanResult {
        problem: *problem,
        profile_kind: profile.kind().to_owned(),
        c_low: lo,
        c_high: hi,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Problem, Grid, SolverConfig, ProfileSpec) {
        (
            Problem::new(1, 2.0, 0.5, 3.0, 0.5).unwrap(),
            Grid::new(1, 20.0, 256).unwrap(),
            SolverConfig {
                time_nodes: 16,
                ..Default::default()
            },
            ProfileSpec::Power {
                c: 1.0,
                a: 0.75,
                trunc: Some(5.0),
            },
        )
    }

    #[test]
    fn bracket_shrinks() {
        let (pr, g, cfg, prof) = setup();
        let r = scan_threshold(&pr, &g, &cfg, &prof, 1e-3, 1e3, 12).unwrap();
        assert!(r.c_low < r.c_high);
        let ratio = (r.c_high / r.c_low).ln();
        assert!(ratio <= 1e6f64.ln() / 4096.0 * (1.0 + 1e-9), "{ratio}");
        assert_eq!(r.history.len(), 14);
        assert!(r
            .to_csv()
            .starts_with("iter,c_mid,verdict\n0,1e-3,Converged\n1,1e3,BlowupProxy\n"));
    }

    #[test]
    fn bracket_errors() {
        let (pr, g, cfg, prof) = setup();
        assert!(matches!(
            scan_threshold(&pr, &g, &cfg, &prof, 10.0, 1e3, 2),
            Err(Error::Scan(_))
        ));
        assert!(matches!(
            scan_threshold(&pr, &g, &cfg, &prof, 1.0, 0.5, 2),
            Err(Error::Invalid(_))
        ));
        let linear = SolverConfig {
            source: false,
            ..cfg
        };
        let e = scan_threshold(&pr, &g, &linear, &prof, 1e-3, 1e3, 2).unwrap_err();
        assert!(e.to_string().contains("c_max"), "{e}");
    }
}
