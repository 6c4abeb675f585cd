//! Writing results as CSV, JSON verdicts and two-column plot data.

use serde::Serialize;

use crate::criteria::{
    CriterionStatistic, MomentBoundReport, SupersolutionParams, SupersolutionReport,
};
use crate::error::Result;
use crate::harness::manifest::OutputSet;
use crate::harness::scan::ScanResult;
use crate::lowerbound::{BBoundReport, RecursionRun};
use crate::picard::{EvolutionState, SolveReport, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InductionRow {
    pub k: usize,
    pub quadrature: f64,
    pub f_next: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma41Row {
    pub s: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub enum ReportItem {
    Solve {
        report: SolveReport,
        state: EvolutionState,
    },
    Statistic {
        name: String,
        stat: CriterionStatistic,
    },
    Scan(ScanResult),
    Supersolution {
        params: SupersolutionParams,
        r: f64,
        report: SupersolutionReport,
        solve_verdict: Verdict,
    },
    Lemma41 {
        z: Vec<f64>,
        rho: f64,
        rows: Vec<Lemma41Row>,
    },
    MomentBound(MomentBoundReport),
    Recursion {
        run: RecursionRun,
        bound: BBoundReport,
        induction: Vec<InductionRow>,
        mass_bound: Option<f64>,
    },
    /// Free-form JSON summary, e.g. of a preset.
    Summary {
        name: String,
        value: serde_json::Value,
    },
}

/// `sigma,statistic` rows sorted by decreasing sigma.
pub fn statistic_csv(stat: &CriterionStatistic) -> String {
    let mut rows: Vec<(f64, f64)> = stat
        .sigmas
        .iter()
        .copied()
        .zip(stat.values.iter().copied())
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = String::from("sigma,statistic\n");
    for (s, v) in rows {
        out.push_str(&format!("{s:e},{v:e}\n"));
    }
    out
}

fn plot(header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = format!("# {header}\n");
    for (x, y) in rows {
        out.push_str(&format!("{x:e} {y:e}\n"));
    }
    out
}

/// Writes one statistic as `csv`, its verdict as `json`, and plot data.
pub fn write_statistic(
    out: &mut OutputSet,
    csv: &str,
    json: &str,
    plot_name: &str,
    stat: &CriterionStatistic,
) -> Result<()> {
    out.write(csv, statistic_csv(stat).as_bytes())?;
    out.write_json(json, &stat.verdict_json())?;
    let rows = stat.sigmas.iter().copied().zip(stat.values.iter().copied());
    out.write(
        &format!("plots/{plot_name}.dat"),
        plot("sigma statistic", rows).as_bytes(),
    )
}

pub fn emit_report(items: &[ReportItem], out: &mut OutputSet) -> Result<()> {
    for item in items {
        match item {
            ReportItem::Solve { report, state } => {
                out.write_json(
                    "report.json",
                    &serde_json::json!({
                        "problem": state.problem,
                        "time_nodes": state.time_nodes,
                        "report": report,
                    }),
                )?;
                for (j, f) in state.iterates.iter().enumerate() {
                    out.write(&format!("fields/u_{:03}.csv", j + 1), f.to_csv().as_bytes())?;
                }
                let rows = report
                    .sup_norm_history
                    .iter()
                    .enumerate()
                    .map(|(k, s)| ((k + 1) as f64, *s));
                out.write(
                    "plots/sup_norm.dat",
                    plot("iterate sup_norm", rows).as_bytes(),
                )?;
                let rows = state.time_nodes[1..]
                    .iter()
                    .copied()
                    .zip(state.iterates.iter().map(|f| f.sup_norm()));
                out.write("plots/sup_in_time.dat", plot("t sup_norm", rows).as_bytes())?;
            }
            ReportItem::Statistic { name, stat } => {
                write_statistic(
                    out,
                    &format!("{name}/stats.csv"),
                    &format!("{name}/verdict.json"),
                    name,
                    stat,
                )?;
            }
            ReportItem::Scan(scan) => {
                out.write("scan.csv", scan.to_csv().as_bytes())?;
                out.write_json("scan.json", scan)?;
                let rows = scan.history.iter().map(|s| (s.iter as f64, s.c_mid));
                out.write("plots/scan.dat", plot("iter c_mid", rows).as_bytes())?;
            }
            ReportItem::Supersolution {
                params,
                r,
                report,
                solve_verdict,
            } => {
                let mut csv = String::from("t,min_residual\n");
                for (t, m) in report.samples.iter().zip(&report.min_residual) {
                    csv.push_str(&format!("{t:e},{m:e}\n"));
                }
                out.write("supersolution.csv", csv.as_bytes())?;
                out.write_json(
                    "supersolution.json",
                    &serde_json::json!({"params": params, "r": r, "report": report, "picard_verdict": solve_verdict}),
                )?;
                let rows = report
                    .samples
                    .iter()
                    .copied()
                    .zip(report.min_residual.iter().copied());
                out.write(
                    "plots/supersolution.dat",
                    plot("t min_residual", rows).as_bytes(),
                )?;
            }
            ReportItem::Lemma41 { z, rho, rows } => {
                let mut csv = String::from("s,ratio\n");
                for r in rows {
                    csv.push_str(&format!("{:e},{:e}\n", r.s, r.ratio));
                }
                out.write("lemma41.csv", csv.as_bytes())?;
                let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
                out.write_json("lemma41.json", &serde_json::json!({"z": z, "rho": rho, "ratio": max, "finite": max.is_finite()}))?;
                out.write(
                    "plots/lemma41.dat",
                    plot("s ratio", rows.iter().map(|r| (r.s, r.ratio))).as_bytes(),
                )?;
            }
            ReportItem::MomentBound(m) => {
                out.write_json("moment_bound.json", m)?;
                let rows = m.s_grid.iter().copied().zip(m.scaled.iter().copied());
                out.write(
                    "plots/moment_bound.dat",
                    plot("s scaled_moment", rows).as_bytes(),
                )?;
            }
            ReportItem::Recursion {
                run,
                bound,
                induction,
                mass_bound,
            } => {
                out.write("recursion.csv", run.to_csv().as_bytes())?;
                out.write_json(
                    "b_bound.json",
                    &serde_json::json!({"bound": bound, "beta": run.beta, "mass_bound": mass_bound}),
                )?;
                let mut csv = String::from("k,quadrature,f_next,rel_error\n");
                for r in induction {
                    csv.push_str(&format!(
                        "{},{:e},{:e},{:e}\n",
                        r.k, r.quadrature, r.f_next, r.rel_error
                    ));
                }
                out.write("induction.csv", csv.as_bytes())?;
                let rows = run.b.iter().enumerate().map(|(k, b)| ((k + 1) as f64, *b));
                out.write("plots/b_k.dat", plot("k b_k", rows).as_bytes())?;
            }
            ReportItem::Summary { name, value } => {
                out.write_json(&format!("{name}.json"), value)?
            }
        }
    }
    Ok(())
}
