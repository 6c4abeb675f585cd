//! Configuration, threshold scans, manifests, reports and the command line.

pub mod cli;
pub mod config;
pub mod manifest;
pub mod report;
pub mod run;
pub mod scan;

pub use config::RunConfig;
pub use manifest::{CheckKind, Invocation, RunManifest};
pub use report::{emit_report, ReportItem};
pub use run::{execute, replay, run_experiment};
pub use scan::{scan_threshold, ScanResult};
