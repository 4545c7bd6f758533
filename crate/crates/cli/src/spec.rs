use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use secbeam::model::load_config;
use secbeam::NetworkConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Secrecy,
    SecrecyNoeve,
    See,
}

impl Mode {
    /// Prefix of the figure CSVs and unit of the aggregated objective.
    pub fn figure_prefix(self) -> &'static str {
        match self {
            Mode::Secrecy => "rate",
            Mode::SecrecyNoeve => "noeve_rate",
            Mode::See => "see",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Mode::See => "bits/J/Hz",
            _ => "bits/s/Hz",
        }
    }
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "secrecy" => Ok(Mode::Secrecy),
            "secrecy-noeve" => Ok(Mode::SecrecyNoeve),
            "see" => Ok(Mode::See),
            other => Err(CliError::Usage(format!(
                "unknown mode `{other}` (expected secrecy, secrecy-noeve or see)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Secrecy => "secrecy",
            Mode::SecrecyNoeve => "secrecy-noeve",
            Mode::See => "see",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "M")]
    Antennas,
    #[serde(rename = "e_min_dbm")]
    EminDbm,
    #[serde(rename = "eps0")]
    Eps0,
    #[serde(rename = "eps1")]
    Eps1,
}

impl Axis {
    /// Configuration key the axis writes.
    pub fn key(self) -> &'static str {
        match self {
            Axis::Antennas => "M",
            Axis::EminDbm => "e_min_dbm",
            Axis::Eps0 => "eps0",
            Axis::Eps1 => "eps1",
        }
    }

    /// Axis name in figure file names.
    pub fn figure_name(self) -> &'static str {
        match self {
            Axis::Antennas => "M",
            Axis::EminDbm => "e_min",
            Axis::Eps0 => "eps0",
            Axis::Eps1 => "eps1",
        }
    }
}

/// `none` or `AXIS:v1,v2,...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: Option<Axis>,
    pub values: Vec<String>,
}

impl Sweep {
    pub fn none() -> Self {
        Self {
            axis: None,
            values: Vec::new(),
        }
    }

    /// `(label, config)` per sweep point; a single unlabelled point when
    /// there is no axis.
    pub fn points(&self, base: &NetworkConfig) -> Result<Vec<(String, NetworkConfig)>, CliError> {
        let Some(axis) = self.axis else {
            return Ok(vec![(String::new(), base.clone())]);
        };
        self.values
            .iter()
            .map(|v| {
                let mut cfg = base.clone();
                cfg.set(axis.key(), v)?;
                cfg.validate()?;
                Ok((v.clone(), cfg))
            })
            .collect()
    }
}

impl FromStr for Sweep {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            return Ok(Self::none());
        }
        let (axis, list) = s
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("sweep `{s}`: expected AXIS:v1,v2,...")))?;
        let axis = match axis {
            "M" => Axis::Antennas,
            "e_min_dbm" => Axis::EminDbm,
            "eps0" => Axis::Eps0,
            "eps1" => Axis::Eps1,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown sweep axis `{other}` (expected M, e_min_dbm, eps0 or eps1)"
                )))
            }
        };
        let values: Vec<String> = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(String::from)
            .collect();
        if values.is_empty() {
            return Err(CliError::Usage(format!("sweep `{s}` has no values")));
        }
        Ok(Self {
            axis: Some(axis),
            values,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub config: Option<PathBuf>,
    /// `KEY=VALUE` overrides applied after the config file.
    pub overrides: Vec<String>,
    pub sweep: Sweep,
    pub trials: usize,
    pub output: PathBuf,
    pub seed_base: u64,
    pub max_iter: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Usage("trial count must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(CliError::Usage("max_iter must be at least 1".into()));
        }
        if self.sweep.axis.is_some() && self.sweep.values.is_empty() {
            return Err(CliError::Usage("sweep list is empty".into()));
        }
        Ok(())
    }

    pub fn base_config(&self) -> Result<NetworkConfig, CliError> {
        resolve_config(self.config.as_deref(), &self.overrides)
    }
}

/// Loads `path` (or the reference scenario) and applies `KEY=VALUE`
/// overrides in order.
pub fn resolve_config(path: Option<&std::path::Path>, overrides: &[String]) -> Result<NetworkConfig, CliError> {
    let mut cfg = match path {
        Some(p) => load_config(p)?,
        None => NetworkConfig::reference(),
    };
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("override `{o}`: expected KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}
