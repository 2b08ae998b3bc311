//! Run configuration read from `--config` files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rationing::model::validate_params;
use rationing::{Policy, SystemParams};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

fn default_version() -> u32 {
    CONFIG_VERSION
}

/// Unknown top-level keys are ignored so that the experiment fixtures can be
/// passed as configs; nested blocks are strict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub params: SystemParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Theta,
    Lambda,
    Penalty,
}

/// Evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            c => {
                let m = (c - 1) as f64;
                (0..c)
                    .map(|j| {
                        let t = j as f64;
                        (self.start * (m - t) + self.stop * t) / m
                    })
                    .collect()
            }
        }
    }
}

impl std::str::FromStr for Grid {
    type Err = String;

    /// `start:stop:count`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:count, got {s:?}"));
        }
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        Ok(Grid {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            count: parts[2].trim().parse().map_err(|e| format!("{:?}: {e}", parts[2]))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

fn default_warmup() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub horizon: f64,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::usage(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parameters after model validation; warnings are returned alongside.
    pub fn validated(&self) -> CliResult<(SystemParams, Vec<String>)> {
        let v = validate_params(self.params)?;
        Ok((v.params, v.warnings.iter().map(ToString::to_string).collect()))
    }
}

/// Parse a policy literal: `0,1,1`, `0 1 1` or `011`.
pub fn parse_policy(text: &str) -> Result<Policy, String> {
    let t = text.trim();
    let digits: Vec<&str> = if t.contains(',') || t.contains(char::is_whitespace) {
        t.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect()
    } else {
        t.split("").filter(|s| !s.is_empty()).collect()
    };
    if digits.is_empty() {
        return Err("policy is empty".into());
    }
    let mut out = Vec::with_capacity(digits.len());
    for d in digits {
        match d {
            "0" => out.push(0),
            "1" => out.push(1),
            other => return Err(format!("policy entries must be 0 or 1, got {other:?}")),
        }
    }
    Policy::new(out).map_err(|e| e.to_string())
}
