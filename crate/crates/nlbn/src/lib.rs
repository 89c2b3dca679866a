//! Experiment driver for `nlbn-core`.
//!
//! ```text
//! nlbn <subcommand> [--config file] [--key value ...] [--out path]
//! ```
//!
//! Subcommands: `eig`, `solve`, `scan-gamma`, `bubble-scan`, `level-check`,
//! `window`, `system-check`, `flow`. Tabular results are CSV with a header
//! line, floats in `{:.16e}` and rows sorted by their leading columns; single
//! runs are JSON objects with sorted keys.

mod commands;
pub mod config;
pub mod pool;

use std::fmt;
use std::fs;

pub use commands::{dispatch, Output};
pub use config::{parse_args, parse_config_text, ExperimentConfig};

/// Failure classes and their process exit codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Exit 2.
    Config(String),
    /// Exit 3.
    NonConvergence(String),
    /// Exit 4.
    Numerical(String),
    /// Exit 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::NonConvergence(m) => write!(f, "not converged: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nlbn_core::Error> for CliError {
    fn from(e: nlbn_core::Error) -> Self {
        use nlbn_core::Error as E;
        match e {
            E::InvalidConfiguration(_)
            | E::InvalidArgument(_)
            | E::ShapeMismatch { .. }
            | E::ThresholdViolation { .. }
            | E::SupercriticalDirection { .. } => CliError::Config(e.to_string()),
            E::UnstableStep { .. } => CliError::NonConvergence(e.to_string()),
            E::QuadratureFailure(_) | E::AsymptoticsNotResolved { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

/// Runs one command line (without the program name) and returns the exit code.
/// Output goes to `--out` when given, otherwise to stdout; diagnostics go to stderr.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let result = parse_args(args).and_then(|cfg| {
        let output = dispatch(&cfg)?;
        for note in &output.notes {
            eprintln!("nlbn: {note}");
        }
        match &cfg.out {
            Some(path) => fs::write(path, &output.body)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
            None => print!("{}", output.body),
        }
        Ok(output)
    });
    match result {
        Ok(Output { status: None, .. }) => 0,
        Ok(Output { status: Some(err), .. }) | Err(err) => {
            eprintln!("nlbn: {err}");
            err.exit_code()
        }
    }
}
