//! `hardylab` command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::manifest::{CheckKind, Invocation, RunManifest};
use crate::harness::run::{execute, replay};

#[derive(Debug, Parser)]
#[command(
    name = "hardylab",
    version,
    about = "Numerical lab for fractional Hardy parabolic equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate G(r, 1) as `r,G` CSV.
    Kernel {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Picard solve; writes report.json and per-node field CSVs.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One criterion statistic or certificate, written to the --out file.
    Check {
        kind: CheckKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Amplitude bisection between existence and blow-up.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// The (a_k, b_k) recursion and the induction-step check.
    Recursion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Everything the config asks for, including presets.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a manifest and compare output hashes.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Exit status: 0 success, 2 validation error, 3 numerical failure, 1 I/O.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_validation() {
        2
    } else if matches!(err, Error::Io(_)) {
        1
    } else {
        3
    }
}

/// Caps the rayon pool at `HARDYLAB_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("HARDYLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("HARDYLAB_THREADS = {v:?} is not a thread count")))?;
    if n == 0 {
        return Err(Error::Invalid("HARDYLAB_THREADS must be at least 1".into()));
    }
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<String> {
    configure_threads()?;
    let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(Error::from);
    let manifest = match &cli.command {
        Command::Kernel {
            dim,
            theta,
            rmax,
            points,
            out,
        } => execute(
            &Invocation::Kernel {
                dim: *dim,
                theta: *theta,
                rmax: *rmax,
                points: *points,
            },
            None,
            out,
        )?,
        Command::Solve { config, out } => execute(&Invocation::Solve, Some(&read(config)?), out)?,
        Command::Check { kind, config, out } => execute(
            &Invocation::Check { kind: *kind },
            Some(&read(config)?),
            out,
        )?,
        Command::Scan { config, out } => execute(&Invocation::Scan, Some(&read(config)?), out)?,
        Command::Recursion { config, out } => {
            execute(&Invocation::Recursion, Some(&read(config)?), out)?
        }
        Command::Report { config, out } => execute(&Invocation::Report, Some(&read(config)?), out)?,
        Command::Replay { manifest, out } => {
            let m = RunManifest::read(manifest)?;
            let rep = replay(&m, out)?;
            if !rep.identical() {
                return Err(Error::Numerical(format!(
                    "replay differs: {:?}",
                    rep.mismatched
                )));
            }
            return Ok(format!("replay identical: {} outputs", rep.compared));
        }
    };
    Ok(format!("wrote {} outputs", manifest.outputs.len()))
}

pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subcommands() {
        let c = Cli::try_parse_from([
            "hardylab", "check", "lemma41", "--config", "a.json", "--out", "s.csv",
        ])
        .unwrap();
        assert!(matches!(
            c.command,
            Command::Check {
                kind: CheckKind::Lemma41,
                ..
            }
        ));
        let c = Cli::try_parse_from([
            "hardylab", "kernel", "--dim", "1", "--theta", "1.5", "--out", "k.csv",
        ])
        .unwrap();
        assert!(matches!(c.command, Command::Kernel { dim: 1, .. }));
        assert!(
            Cli::try_parse_from(["hardylab", "check", "bogus", "--config", "a", "--out", "b"])
                .is_err()
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Invalid("x".into())), 2);
        assert_eq!(
            exit_code(&Error::Config {
                path: "a".into(),
                message: "b".into()
            }),
            2
        );
        assert_eq!(exit_code(&Error::Numerical("x".into())), 3);
        assert_eq!(exit_code(&Error::Aliasing { min_value: -1.0 }), 3);
        assert_eq!(exit_code(&Error::Scan("x".into())), 3);
    }
}
