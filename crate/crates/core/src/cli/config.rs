use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::error::Error;
use crate::pas::{uniform_mode, uniform_qam_mode, CodeRate, PasMode, Scheme};

/// One mode of an experiment.
///
/// LUT schemes take `m`, `k` and `rate`; `PAS-nD-1D` takes `m`, `rate`, `n`
/// and either `nu` or a target `se`; `UNIFORM` takes `m` and optionally a
/// target `se` that fixes its code rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub scheme: Scheme,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<String>,
}

impl ModeSpec {
    pub fn lut(scheme: Scheme, m: usize, k: u32, rate: &str) -> Self {
        ModeSpec {
            scheme,
            m,
            k: Some(k),
            nu: None,
            se: None,
            n: None,
            rate: Some(rate.to_string()),
        }
    }

    pub fn uniform(m: usize) -> Self {
        ModeSpec {
            scheme: Scheme::Uniform,
            m,
            k: None,
            nu: None,
            se: None,
            n: None,
            rate: None,
        }
    }

    fn code_rate(&self) -> Result<CodeRate, Error> {
        self.rate
            .as_deref()
            .ok_or_else(|| Error::Config(format!("{} mode needs a code rate", self.scheme)))?
            .parse()
    }

    fn unexpected(&self, field: &str) -> Error {
        Error::Config(format!("field {field:?} does not apply to {}", self.scheme))
    }

    pub fn build(&self) -> Result<PasMode, Error> {
        match self.scheme {
            Scheme::Pas4d4d | Scheme::Pas4d2d => {
                if self.nu.is_some() || self.n.is_some() || self.se.is_some() {
                    return Err(self.unexpected("nu/n/se"));
                }
                let k = self
                    .k
                    .ok_or_else(|| Error::Config(format!("{} mode needs k", self.scheme)))?;
                PasMode::lut(self.scheme, self.m, k, self.code_rate()?)
            }
            Scheme::PasNd1d => {
                if self.k.is_some() {
                    return Err(self.unexpected("k"));
                }
                let n = self
                    .n
                    .ok_or_else(|| Error::Config("PAS-nD-1D mode needs n".into()))?;
                let rate = self.code_rate()?;
                match (self.nu, self.se) {
                    (Some(nu), None) => PasMode::ccdm(self.m, nu, n, rate),
                    (None, Some(se)) => PasMode::ccdm_for_se(self.m, se, n, rate),
                    _ => Err(Error::Config(
                        "PAS-nD-1D mode needs exactly one of nu and se".into(),
                    )),
                }
            }
            Scheme::Uniform => {
                if self.k.is_some() || self.nu.is_some() || self.n.is_some() || self.rate.is_some()
                {
                    return Err(self.unexpected("k/nu/n/rate"));
                }
                match self.se {
                    Some(se) => {
                        if !self.m.is_power_of_two() || self.m < 2 {
                            return Err(Error::InvalidAskSize(self.m));
                        }
                        uniform_qam_mode(2 * self.m.trailing_zeros(), se)
                    }
                    None => uniform_mode(self.m),
                }
            }
        }
    }
}

/// Inclusive SNR grid in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrGrid {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl SnrGrid {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.step_db > 0.0) || !self.step_db.is_finite() {
            return Err(Error::Config(format!(
                "SNR step must be positive, got {}",
                self.step_db
            )));
        }
        if !self.start_db.is_finite() || !self.stop_db.is_finite() || self.stop_db < self.start_db {
            return Err(Error::Config(format!(
                "invalid SNR range {}..{} dB",
                self.start_db, self.stop_db
            )));
        }
        Ok(())
    }

    /// Grid points `start + i step` up to `stop`, endpoint included within
    /// rounding.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| self.start_db + i as f64 * self.step_db)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Monte-Carlo samples `K` per cell.
    pub samples: usize,
    #[serde(default)]
    pub oracle: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub snr: SnrGrid,
    pub modes: Vec<ModeSpec>,
}

/// Command-line replacements for top-level scalars.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub snr_start: Option<f64>,
    pub snr_stop: Option<f64>,
    pub snr_step: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub const MIN_SAMPLES: usize = 1000;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.snr_start {
            self.snr.start_db = v;
        }
        if let Some(v) = o.snr_stop {
            self.snr.stop_db = v;
        }
        if let Some(v) = o.snr_step {
            self.snr.step_db = v;
        }
        if let Some(v) = o.samples {
            self.samples = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
    }

    /// Checks the grid and sample count and builds every mode.
    pub fn validate(&self) -> Result<Vec<PasMode>, Error> {
        self.snr.validate()?;
        if self.samples < MIN_SAMPLES {
            return Err(Error::Config(format!(
                "samples must be at least {MIN_SAMPLES}, got {}",
                self.samples
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("no modes configured".into()));
        }
        self.modes.iter().map(ModeSpec::build).collect()
    }
}
