//! Executing invocations against a config and recording manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::criteria::{
    alpha_range, default_sigmas, default_z_set, lemma41_check, log_grid, necessary_critical_stat,
    necessary_offorigin_stat, necessary_subcritical_stat, sufficient_condition_stat,
    supersolution_exponents, verify_supersolution, CriterionStatistic,
};
use crate::error::{Error, Result};
use crate::harness::config::{Preset, RunConfig};
use crate::harness::manifest::{CheckKind, Invocation, OutputSet, RunManifest};
use crate::harness::report::{emit_report, write_statistic, InductionRow, Lemma41Row, ReportItem};
use crate::harness::scan::scan_threshold;
use crate::kernel::{synthesize_kernel, KernelSpec, DEFAULT_POINTS};
use crate::lowerbound::{a_sequence, b_bound_check, induction_step, nonexistence_mass_bound};
use crate::measure::MeasureData;
use crate::picard::Solver;
use crate::problem::Problem;

const MANIFEST: &str = "manifest.json";

/// Statistics of the necessary conditions that apply at the config's `p`.
pub fn necessary_statistics(
    cfg: &RunConfig,
    mu: &MeasureData,
) -> Result<Vec<(String, CriterionStatistic)>> {
    let pr = cfg.problem()?;
    let sig = sigmas(cfg, &pr);
    let z_set = cfg
        .check
        .z_set
        .clone()
        .unwrap_or_else(|| default_z_set(&pr));
    let mut out = vec![];
    if (pr.p - pr.p_gamma()).abs() <= 1e-12 {
        out.push((
            "critical".to_owned(),
            necessary_critical_stat(mu, &pr, &sig)?,
        ));
    }
    if let (Some(z), true) = (&cfg.check.z, (pr.p - pr.p0()).abs() <= 1e-12) {
        out.push((
            "offorigin".to_owned(),
            necessary_offorigin_stat(mu, &pr, z, &sig)?,
        ));
    }
    out.push((
        "subcritical".to_owned(),
        necessary_subcritical_stat(mu, &pr, &z_set, &sig)?,
    ));
    Ok(out)
}

fn sigmas(cfg: &RunConfig, pr: &Problem) -> Vec<f64> {
    cfg.check
        .sigmas
        .clone()
        .unwrap_or_else(|| default_sigmas(pr))
}

fn sufficient(cfg: &RunConfig) -> Result<CriterionStatistic> {
    let pr = cfg.problem()?;
    let z_set = cfg
        .check
        .z_set
        .clone()
        .unwrap_or_else(|| default_z_set(&pr));
    sufficient_condition_stat(
        &cfg.measure()?,
        &pr,
        cfg.check.r.unwrap_or(1.2),
        &z_set,
        &sigmas(cfg, &pr),
    )
}

fn supersolution_item(cfg: &RunConfig) -> Result<ReportItem> {
    let pr = cfg.problem()?;
    let (lo, hi) = alpha_range(&pr);
    let params = supersolution_exponents(&pr, cfg.check.alpha.unwrap_or(0.5 * (lo + hi)))?;
    let r = cfg.check.r.unwrap_or(1.2);
    let (grid, scfg) = (cfg.grid()?, cfg.solver_config());
    let mu = cfg.measure()?;
    let solver = Solver::new(pr, grid, scfg)?;
    let samples = match &cfg.check.samples {
        Some(s) => s.clone(),
        None => solver.time_nodes()[1..]
            .iter()
            .copied()
            .filter(|t| *t < 1.0)
            .collect(),
    };
    let report = verify_supersolution(&mu, &params, r, &pr, &grid, &scfg, &samples)?;
    let solve_verdict = solver.solve(&mu)?.0.verdict;
    Ok(ReportItem::Supersolution {
        params,
        r,
        report,
        solve_verdict,
    })
}

fn lemma41_item(cfg: &RunConfig) -> Result<ReportItem> {
    let pr = cfg.problem()?;
    let l = pr.length_scale();
    let z = cfg.check.z.clone().unwrap_or_else(|| {
        let mut z = vec![0.0; pr.dim];
        z[0] = 2.0 * l;
        z
    });
    let rho = cfg.check.rho.unwrap_or(0.1 * l);
    let s_grid = match &cfg.check.s_grid {
        Some(s) => s.clone(),
        None => {
            let lo = rho.powf(pr.theta);
            log_grid(0.99 * pr.horizon / 3.0, 1.01 * lo, 12)?
        }
    };
    let rows = s_grid
        .iter()
        .map(|&s| {
            Ok(Lemma41Row {
                s,
                ratio: lemma41_check(&pr, &z, rho, &[s])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReportItem::Lemma41 { z, rho, rows })
}

fn recursion_item(cfg: &RunConfig) -> Result<ReportItem> {
    let rc = cfg.recursion.ok_or_else(|| Error::Config {
        path: "recursion".into(),
        message: "the recursion command needs a recursion section".into(),
    })?;
    let pr = cfg.problem()?;
    let run = a_sequence(rc.c1, rc.c2, pr.p, rc.k)?;
    let bound = b_bound_check(&run);
    let t = rc.t.unwrap_or(pr.horizon);
    let induction = (1..rc.k.min(6))
        .map(|k| {
            let (q, f) =
                induction_step(&run, rc.mu_ball, rc.rho, pr.theta, pr.dim, pr.gamma, t, k)?;
            Ok(InductionRow {
                k,
                quadrature: q,
                f_next: f,
                rel_error: (q - f).abs() / f,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReportItem::Recursion {
        run,
        bound,
        induction,
        mass_bound: nonexistence_mass_bound(pr.horizon, rc.rho, pr.theta, pr.p).ok(),
    })
}

#[derive(Serialize)]
struct PresetRow {
    p: f64,
    statistic: &'static str,
    verdict: serde_json::Value,
}

/// Unit Dirac at the origin: Eq. (1.6) at `p = p_gamma`, Eq. (1.5) above it.
fn remark12_items(cfg: &RunConfig) -> Result<Vec<ReportItem>> {
    let base = cfg.problem()?;
    let pg = base.p_gamma();
    let mut ps = vec![pg, pg + 0.25];
    if base.p > pg + 1e-12 && !ps.contains(&base.p) {
        ps.push(base.p);
    }
    let mu = MeasureData::dirac(base.dim, &vec![0.0; base.dim], 1.0)?;
    let mut items = vec![];
    let mut rows = vec![];
    for p in ps {
        let pr = Problem { p, ..base };
        pr.validate()?;
        let sig = cfg
            .check
            .sigmas
            .clone()
            .unwrap_or_else(|| default_sigmas(&pr));
        let (name, stat) = if p == pg {
            ("critical", necessary_critical_stat(&mu, &pr, &sig)?)
        } else {
            let z = cfg
                .check
                .z_set
                .clone()
                .unwrap_or_else(|| default_z_set(&pr));
            (
                "subcritical",
                necessary_subcritical_stat(&mu, &pr, &z, &sig)?,
            )
        };
        rows.push(PresetRow {
            p,
            statistic: name,
            verdict: stat.verdict_json(),
        });
        items.push(ReportItem::Statistic {
            name: format!("remark12_p{p}_{name}"),
            stat,
        });
    }
    items.push(ReportItem::Summary {
        name: "preset".into(),
        value: serde_json::json!({"preset": "remark12-dirac", "rows": rows}),
    });
    Ok(items)
}

/// Everything a config asks for: preset, solve and criteria, scan, recursion.
fn experiment_items(cfg: &RunConfig) -> Result<Vec<ReportItem>> {
    if let Some(Preset::Remark12Dirac) = cfg.preset {
        return remark12_items(cfg);
    }
    let mut items = vec![];
    if cfg.profile.is_some() {
        let mu = cfg.measure()?;
        let solver = Solver::new(cfg.problem()?, cfg.grid()?, cfg.solver_config())?;
        let (report, state) = solver.solve(&mu)?;
        items.push(ReportItem::Solve { report, state });
        for (name, stat) in necessary_statistics(cfg, &mu)? {
            items.push(ReportItem::Statistic { name, stat });
        }
        if cfg.check.r.is_some() {
            items.push(ReportItem::Statistic {
                name: "sufficient".into(),
                stat: sufficient(cfg)?,
            });
        }
    }
    if let Some(s) = cfg.scan {
        items.push(ReportItem::Scan(scan_threshold(
            &cfg.problem()?,
            &cfg.grid()?,
            &cfg.solver_config(),
            cfg.profile()?,
            s.c_min,
            s.c_max,
            s.iters,
        )?));
    }
    if cfg.recursion.is_some() {
        items.push(recursion_item(cfg)?);
    }
    Ok(items)
}

fn split_file(out: &Path) -> Result<(PathBuf, String, String)> {
    let name = out
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Invalid(format!("--out {} is not a file path", out.display())))?
        .to_owned();
    let stem = Path::new(&name)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(&name)
        .to_owned();
    let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    let dir = if dir.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        dir
    };
    Ok((dir, name, stem))
}

/// Runs `inv`; directory commands write into `out`, while `kernel` and
/// `check` treat `out` as the primary file and put siblings beside it.
pub fn execute(inv: &Invocation, config_text: Option<&str>, out: &Path) -> Result<RunManifest> {
    let cfg = match config_text {
        Some(t) => Some(RunConfig::from_json(t)?),
        None => None,
    };
    let need = || {
        cfg.as_ref().ok_or_else(|| Error::Config {
            path: String::new(),
            message: "this command needs --config".into(),
        })
    };
    let (set, manifest_path) = match inv {
        Invocation::Kernel {
            dim,
            theta,
            rmax,
            points,
        } => {
            let spec = KernelSpec::new(*dim, *theta)?;
            let table = synthesize_kernel(
                &spec,
                rmax.unwrap_or(spec.default_r_max()),
                points.unwrap_or(DEFAULT_POINTS),
            )?;
            let (dir, name, stem) = split_file(out)?;
            let mut set = OutputSet::new(&dir)?;
            set.write(&name, table.to_csv().as_bytes())?;
            (set, dir.join(format!("{stem}.manifest.json")))
        }
        Invocation::Check { kind } => {
            let cfg = need()?;
            let (dir, name, stem) = split_file(out)?;
            let mut set = OutputSet::new(&dir)?;
            match kind {
                CheckKind::Necessary => {
                    let stats = necessary_statistics(cfg, &cfg.measure()?)?;
                    for (i, (label, stat)) in stats.iter().enumerate() {
                        if i == 0 {
                            write_statistic(&mut set, &name, &format!("{stem}.json"), &stem, stat)?;
                        } else {
                            let s = format!("{stem}_{label}");
                            write_statistic(
                                &mut set,
                                &format!("{s}.csv"),
                                &format!("{s}.json"),
                                &s,
                                stat,
                            )?;
                        }
                    }
                }
                CheckKind::Sufficient => {
                    write_statistic(
                        &mut set,
                        &name,
                        &format!("{stem}.json"),
                        &stem,
                        &sufficient(cfg)?,
                    )?;
                }
                CheckKind::Supersolution | CheckKind::Lemma41 => {
                    let item = if *kind == CheckKind::Supersolution {
                        supersolution_item(cfg)?
                    } else {
                        lemma41_item(cfg)?
                    };
                    // written under the fixed names, then the CSV copied to --out
                    emit_report(std::slice::from_ref(&item), &mut set)?;
                    let fixed = if *kind == CheckKind::Supersolution {
                        "supersolution.csv"
                    } else {
                        "lemma41.csv"
                    };
                    if name != fixed {
                        let bytes = std::fs::read(dir.join(fixed))?;
                        set.write(&name, &bytes)?;
                    }
                }
            }
            (set, dir.join(format!("{stem}.manifest.json")))
        }
        Invocation::Solve | Invocation::Scan | Invocation::Recursion | Invocation::Report => {
            let cfg = need()?;
            let items = match inv {
                Invocation::Solve => {
                    let solver = Solver::new(cfg.problem()?, cfg.grid()?, cfg.solver_config())?;
                    let (report, state) = solver.solve(&cfg.measure()?)?;
                    vec![ReportItem::Solve { report, state }]
                }
                Invocation::Scan => {
                    let s = cfg.scan.ok_or_else(|| Error::Config {
                        path: "scan".into(),
                        message: "the scan command needs a scan section".into(),
                    })?;
                    vec![ReportItem::Scan(scan_threshold(
                        &cfg.problem()?,
                        &cfg.grid()?,
                        &cfg.solver_config(),
                        cfg.profile()?,
                        s.c_min,
                        s.c_max,
                        s.iters,
                    )?)]
                }
                Invocation::Recursion => vec![recursion_item(cfg)?],
                _ => experiment_items(cfg)?,
            };
            let mut set = OutputSet::new(out)?;
            emit_report(&items, &mut set)?;
            (set, out.join(MANIFEST))
        }
    };
    let manifest = RunManifest::new(inv.clone(), config_text, set.into_files());
    manifest.write(&manifest_path)?;
    Ok(manifest)
}

/// `run_experiment`: the `report` command on a config file.
pub fn run_experiment(config: &Path, out: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(config)?;
    execute(&Invocation::Report, Some(&text), out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub config_hash_ok: bool,
    pub compared: usize,
    /// Outputs whose hash differs or which were not produced again.
    pub mismatched: Vec<String>,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        self.config_hash_ok && self.mismatched.is_empty()
    }
}

/// Re-runs a manifest into `out_dir` and compares every output hash.
pub fn replay(manifest: &RunManifest, out_dir: &Path) -> Result<ReplayReport> {
    let target = match manifest.invocation {
        Invocation::Kernel { .. } | Invocation::Check { .. } => {
            let first = manifest
                .outputs
                .first()
                .ok_or_else(|| Error::Invalid("manifest lists no outputs".into()))?;
            out_dir.join(&first.path)
        }
        _ => out_dir.to_path_buf(),
    };
    let again = execute(
        &manifest.invocation,
        manifest.config_text.as_deref(),
        &target,
    )?;
    let mut mismatched = vec![];
    for f in &manifest.outputs {
        match again.outputs.iter().find(|g| g.path == f.path) {
            Some(g) if g.sha256 == f.sha256 => {}
            _ => mismatched.push(f.path.clone()),
        }
    }
    if again.outputs.len() != manifest.outputs.len() {
        for g in &again.outputs {
            if !manifest.outputs.iter().any(|f| f.path == g.path) {
                mismatched.push(g.path.clone());
            }
        }
    }
    Ok(ReplayReport {
        config_hash_ok: manifest.config_hash_matches(),
        compared: manifest.outputs.len(),
        mismatched,
    })
}
