//! Run configuration, report envelopes, and the command entry points.
//!
//! Commands return in-memory [`Artifact`]s and an exit code; writing them
//! to disk is left to the caller. No artifact carries a timestamp, so
//! identical inputs give byte-identical output.

mod commands;
mod markdown;
mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use commands::{
    cmd_plot, cmd_psych, cmd_screen, cmd_sweep, cmd_synthetic, load_inputs, Inputs, PsychReport, ScreenReport,
    SweepReport, SyntheticReport,
};
pub use svg::{render_figure, Figure};

use crate::classify::{ClassifyError, TierThresholds};
use crate::data::{DataError, DEFAULT_CONSENSUS_THRESHOLD};
use crate::indices::NormsMode;
use crate::par::Execution;
use crate::psychometrics::{DiscriminatorOutcome, PsychError};
use crate::statkit::Resampling;
use crate::synthetic::{AccuracyModel, PolicySpec, SyntheticError};

pub const TOOL_NAME: &str = "validity";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status when the run succeeded and no model is Tier 1.
pub const EXIT_CLEAN: i32 = 0;
/// Exit status for errors and for a failed synthetic validation.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status when at least one model is Tier 1.
pub const EXIT_TIER1: i32 = 2;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("classification: {0}")]
    Classify(#[from] ClassifyError),
    #[error("synthetic: {0}")]
    Synthetic(#[from] SyntheticError),
    #[error("psychometrics: {0}")]
    Psych(#[from] PsychError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("report has no `{0}` section")]
    MissingSection(String),
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ReportError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    #[serde(alias = "md")]
    Markdown,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Markdown => "md",
            Format::Csv => "csv",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Format, String> {
        match s {
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}` (json, md, csv)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output directory.
    pub path: Option<PathBuf>,
    /// Restrict output to one format; every format when absent.
    pub format: Option<Format>,
}

/// Everything a run needs. Read from a JSON config file whose keys match
/// these field names; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub norms_path: Option<PathBuf>,
    pub thresholds: TierThresholds,
    pub seed: u64,
    pub bootstrap_iterations: usize,
    pub synthetic_iterations: usize,
    pub family_map: BTreeMap<String, String>,
    pub pairs: Vec<(String, String)>,
    pub output: OutputConfig,
    pub consensus_threshold: f64,
    pub norms_mode: NormsMode,
    pub accuracy_model: AccuracyModel,
    pub n_items: usize,
    pub mc_z: f64,
    pub policies: Vec<PolicySpec>,
    pub resampling: Resampling,
    pub discriminator_outcome: DiscriminatorOutcome,
    /// Also write one generated dataset per policy plus matching norms.
    pub emit_battery: bool,
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: None,
            norms_path: None,
            thresholds: TierThresholds::default(),
            seed: 0,
            bootstrap_iterations: 10_000,
            synthetic_iterations: 1_000,
            family_map: BTreeMap::new(),
            pairs: Vec::new(),
            output: OutputConfig::default(),
            consensus_threshold: DEFAULT_CONSENSUS_THRESHOLD,
            norms_mode: NormsMode::Inclusive,
            accuracy_model: AccuracyModel::default(),
            n_items: 524,
            mc_z: 4.0,
            policies: PolicySpec::battery(),
            resampling: Resampling::Stratified,
            discriminator_outcome: DiscriminatorOutcome::Keep,
            emit_battery: false,
            execution: Execution::Parallel,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<RunConfig> {
        let text = read(path)?;
        serde_json::from_slice(&text).map_err(|source| ReportError::Json { path: path.display().to_string(), source })
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        if !(self.consensus_threshold > 0.0 && self.consensus_threshold <= 1.0) {
            return Err(ReportError::Config(format!(
                "consensus_threshold {} outside (0, 1]",
                self.consensus_threshold
            )));
        }
        if self.mc_z.is_nan() || self.mc_z < 0.0 {
            return Err(ReportError::Config(format!("mc_z {} must be non-negative", self.mc_z)));
        }
        if self.policies.is_empty() {
            return Err(ReportError::Config("no synthetic policies configured".into()));
        }
        Ok(())
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.format.is_none_or(|f| f == format)
    }
}

/// Provenance block embedded in every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub thresholds: TierThresholds,
    /// SHA-256 over the input files, hex encoded.
    pub input_digest: String,
}

impl Envelope {
    pub fn new(command: &str, config: &RunConfig, input_digest: String) -> Envelope {
        Envelope {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            seed: config.seed,
            thresholds: config.thresholds,
            input_digest,
        }
    }

    /// `key=value` lines for CSV and SVG headers.
    pub fn meta(&self) -> Vec<(String, String)> {
        let t = &self.thresholds;
        vec![
            ("tool".into(), format!("{} {}", self.tool, self.version)),
            ("command".into(), self.command.clone()),
            ("seed".into(), self.seed.to_string()),
            (
                "thresholds".into(),
                format!(
                    "rbs_gt={} l_min={} f_min={} fp_min={} tier2_elevated_sd={} tier2_marked_sd={}",
                    t.rbs_gt, t.l_min, t.f_min, t.fp_min, t.tier2_elevated_sd, t.tier2_marked_sd
                ),
            ),
            ("input_digest".into(), self.input_digest.clone()),
        ]
    }
}

/// Streaming SHA-256 over named byte blobs. Names are hashed too, so
/// renaming an input changes the digest.
#[derive(Default)]
pub struct InputDigest(Sha256);

impl InputDigest {
    pub fn add(&mut self, name: &str, bytes: &[u8]) {
        self.0.update((name.len() as u64).to_le_bytes());
        self.0.update(name.as_bytes());
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

/// One output file: a relative name and its bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Artifact {
        Artifact { name: name.into(), bytes }
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.bytes).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub artifacts: Vec<Artifact>,
    pub exit_code: i32,
    /// Short human-readable result for the terminal.
    pub summary: String,
}

impl CommandOutput {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    /// Write every artifact under `dir`, creating directories as needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|source| io_err(parent, source))?;
            }
            let mut f = fs::File::create(&path).map_err(|source| io_err(&path, source))?;
            f.write_all(&a.bytes).map_err(|source| io_err(&path, source))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> ReportError {
    ReportError::Io { path: path.display().to_string(), source }
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| io_err(path, source))
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

/// Fixed-precision number for human-facing tables; `—` when undefined.
pub(crate) fn fmt3(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.3}"),
        Some(v) => v.to_string(),
        None => "—".to_string(),
    }
}
