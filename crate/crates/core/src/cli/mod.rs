//! Experiment runner: configuration, sweeps, mode tables, matcher
//! round-trips and moment tables.

mod commands;
mod config;

use std::path::{Path, PathBuf};

pub use commands::{
    cmd_kurtosis, cmd_modes, cmd_roundtrip, cmd_sweep, default_kurtosis_modes, metric_for,
    run_sweep, write_sweep_csv, RoundtripReport, RoundtripSpec, SweepRow,
};
pub use config::{ExperimentConfig, ModeSpec, Overrides, SnrGrid};

/// Default directory for relative output paths.
pub const OUT_DIR_ENV: &str = "PAS4D_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Invalid(#[from] crate::Error),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Parse(_) => EXIT_CONFIG,
            CliError::Check(_) => EXIT_CHECK,
            CliError::Io(_) => EXIT_RUNTIME,
        }
    }
}

/// Resolves a relative output path against `$PAS4D_OUT_DIR`, if set.
pub fn resolve_output(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}
