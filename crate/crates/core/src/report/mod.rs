//! Configuration, orchestration and persistence of run records.
//!
//! A run writes `record.json` (deterministic for given config bytes),
//! `timings.json`, and one CSV per plot kind the record can supply.

mod config;
mod pipeline;
mod plot;

pub use config::{config_hash, AnalysisSection, Format, LoadedConfig, ModelSection, OutputSection, RunConfig, ScheduleSection};
pub use pipeline::{
    execute, AcOutput, BoxSpectrum, DualityOutput, ExtensionOutput, FamilyOutput, IntertwinerOutput, LevelScan,
    MultiscaleOutput, ResultRecord, SpectrumOutput, SuitabilityOutput, Timings,
};
pub use plot::{emit_plotdata, plot_table, PlotKind, PlotTable};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "QPS_OUT_DIR";

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Pipeline(String),
    #[error("io: {0}")]
    Io(String),
    #[error("unknown plot kind {0:?}")]
    UnknownKind(String),
    #[error("record has no {0} output")]
    MissingOutput(&'static str),
}

impl RunError {
    /// 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::UnknownKind(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "ConfigInvalid",
            RunError::Pipeline(_) => "PipelineError",
            RunError::Io(_) => "IoError",
            RunError::UnknownKind(_) => "UnknownKind",
            RunError::MissingOutput(_) => "MissingOutput",
        }
    }

    /// `{"error": kind, "message": ...}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Spectrum,
    Suitability,
    Multiscale,
    Duality,
    Extension,
    AcEstimate,
    All,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Spectrum,
        Subcommand::Suitability,
        Subcommand::Multiscale,
        Subcommand::Duality,
        Subcommand::Extension,
        Subcommand::AcEstimate,
        Subcommand::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Spectrum => "spectrum",
            Subcommand::Suitability => "suitability",
            Subcommand::Multiscale => "multiscale",
            Subcommand::Duality => "duality",
            Subcommand::Extension => "extension",
            Subcommand::AcEstimate => "ac-estimate",
            Subcommand::All => "all",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| RunError::Config(format!("unknown subcommand {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub timings: Timings,
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
}

/// `--out`, then `QPS_OUT_DIR`, then the config's directory (relative to
/// the config file).
pub fn output_directory(cfg: &LoadedConfig, out: Option<&Path>) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.base.join(&cfg.config.output.directory)
}

/// Loads the config, runs the pipeline and persists the record.
pub fn run(config: impl AsRef<Path>, subcommand: &str, out: Option<&Path>) -> Result<RunOutput, RunError> {
    let sub: Subcommand = subcommand.parse()?;
    let cfg = LoadedConfig::load(config)?;
    let (record, timings) = execute(&cfg, sub)?;
    let directory = output_directory(&cfg, out);
    let files = persist(&record, &timings, &cfg.config.output.formats, &directory)?;
    Ok(RunOutput {
        record,
        timings,
        directory,
        files,
    })
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |e| RunError::Io(format!("{}: {e}", path.display()))
}

pub fn record_to_json(record: &ResultRecord) -> String {
    serde_json::to_string_pretty(record).expect("records serialize")
}

pub fn write_record(record: &ResultRecord, path: &Path) -> Result<(), RunError> {
    std::fs::write(path, record_to_json(record) + "\n").map_err(io(path))
}

pub fn read_record(path: &Path) -> Result<ResultRecord, RunError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

/// Writes the record, the timings and, when requested, every plot table
/// the record supports.
pub fn persist(record: &ResultRecord, timings: &Timings, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files = Vec::new();
    if formats.contains(&Format::Json) {
        let path = dir.join("record.json");
        write_record(record, &path)?;
        files.push(path);
        let path = dir.join("timings.json");
        let text = serde_json::to_string_pretty(timings).expect("timings serialize");
        std::fs::write(&path, text + "\n").map_err(io(&path))?;
        files.push(path);
    }
    if formats.contains(&Format::Csv) {
        for kind in PlotKind::ALL {
            match emit_plotdata(record, kind.name(), dir) {
                Ok(path) => files.push(path),
                Err(RunError::MissingOutput(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(files)
}
