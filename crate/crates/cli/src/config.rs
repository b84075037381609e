//! Experiment configuration files.

use std::path::{Path, PathBuf};

use ccm_core::analysis::{AnalysisOptions, Budget, Sampling, DEFAULT_ENUMERATION_LIMIT};
use ccm_core::schemes::SchemeParams;
use ccm_core::sim::DelayModel;
use ccm_core::{CcmError, EntryDistribution, Result};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Multiply,
    Verify,
    Cond,
    Simulate,
    Demo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Generated(GeneratedPayload),
    Files(FilePayload),
}

/// `A` is `t × r` and `B` (or `X`) is `t × w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedPayload {
    pub r: usize,
    pub t: usize,
    pub w: usize,
    #[serde(default = "unit_entries")]
    pub entries: EntryDistribution,
}

fn unit_entries() -> EntryDistribution {
    EntryDistribution::Uniform { low: -1.0, high: 1.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilePayload {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default)]
    pub limit: Option<u128>,
    /// Sample this many patterns when enumeration would exceed the limit.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub verbose: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub action: Option<Action>,
    pub scheme: SchemeParams,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub payload: Option<Payload>,
    #[serde(default)]
    pub budget: Option<Budget>,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub delay: Option<DelayModel>,
    #[serde(default)]
    pub trials: Option<usize>,
    /// CSV event trace written next to a simulation report.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Workers treated as failed by `multiply`.
    #[serde(default)]
    pub stragglers: Vec<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        if cfg.version != CONFIG_VERSION {
            return Err(CcmError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn check_action(&self, action: Action) -> Result<()> {
        match self.action {
            Some(a) if a != action => Err(CcmError::Config(format!(
                "config is for action {a:?} but {action:?} was requested"
            ))),
            _ => Ok(()),
        }
    }

    pub fn budget(&self) -> Result<Budget> {
        self.budget
            .ok_or_else(|| CcmError::Config("config needs a budget, e.g. {\"mode\":\"workers\",\"value\":4}".into()))
    }

    pub fn analysis_options(&self, seed: u64) -> AnalysisOptions {
        AnalysisOptions {
            limit: self.analysis.limit.unwrap_or(DEFAULT_ENUMERATION_LIMIT),
            sampling: self.analysis.samples.map(|samples| Sampling { samples, seed }),
            verbose: self.analysis.verbose,
            threads: 0,
        }
    }
}
