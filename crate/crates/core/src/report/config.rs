//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunError;
use crate::model::{ModelParams, PotentialSpec};
use crate::multiscale::{
    ContinuationConfig, Growth, MultiscaleConfig, RhoRule, ScaleSchedule, SimplicityRule, WindowRule,
};
use crate::spectral::SuitabilityParams;

/// ```toml
/// [model]
/// potential = "potentials/cosine1.toml"   # relative to this file
/// coupling = 5e-4
/// frequency = [0.618034]
/// phase = [0.13]
/// couplings = [5e-2, 5e-3, 5e-4]          # optional sweep for the family checks
///
/// [schedule]
/// r1 = 6
/// levels = 3
/// growth = { geometric = 2 }              # or { power = 10 }
///
/// [analysis]
/// simplicity = { fixed = 1e-2 }
/// grids = [64, 128, 256]
///
/// [output]
/// directory = "out"
/// formats = ["json", "csv"]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub potential: PathBuf,
    pub coupling: f64,
    pub frequency: Vec<f64>,
    pub phase: Vec<f64>,
    #[serde(default)]
    pub couplings: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub r1: usize,
    pub levels: usize,
    #[serde(default = "power_growth")]
    pub growth: Growth,
}

fn power_growth() -> Growth {
    Growth::Power(10)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub gamma: f64,
    pub tau: f64,
    pub rho: RhoRule,
    pub window: WindowRule,
    pub simplicity: SimplicityRule,
    pub kappa: Option<f64>,
    pub require_scan: bool,
    /// Radius of the boxes diagonalized by `spectrum`; `R_1` when absent.
    pub spectrum_radius: Option<usize>,
    /// Bloch phases per axis for the rational duality check.
    pub bloch_phases: usize,
    pub duality_tolerance: f64,
    /// Label window of the eigenfunction family.
    pub family_window: usize,
    /// Label window of `Q`; `R_J` when absent.
    pub q_window: Option<usize>,
    /// Phase-grid resolutions for the `Q` checks; the last one also samples
    /// the eigenfunction families.
    pub grids: Vec<usize>,
    pub test_functions: usize,
    pub test_degree: usize,
    pub seed: u64,
    /// Resolution of the eigenvalue field; the last of `grids` when absent.
    pub field_resolution: Option<usize>,
    /// Target `1 − √ε` for the κ-set.
    pub epsilon: f64,
    /// `C` in the extension bound `C′ε/δ`.
    pub extension_constant: f64,
    /// Histogram edges `[lo, hi]` and bin count; `[−2d−1, 2d+1]` when absent.
    pub energy_range: Option<[f64; 2]>,
    pub bins: usize,
    /// Bins over `[−2, 2]` for the arcsine comparison.
    pub arcsine_bins: usize,
    /// `(E, s)` pairs for the level-set estimate.
    pub level_sets: Vec<[f64; 2]>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let c = ContinuationConfig::default();
        Self {
            gamma: c.suitability.gamma,
            tau: c.suitability.tau,
            rho: RhoRule::Desk,
            window: c.window,
            simplicity: c.simplicity,
            kappa: None,
            require_scan: false,
            spectrum_radius: None,
            bloch_phases: 4,
            duality_tolerance: 1e-8,
            family_window: 3,
            q_window: None,
            grids: vec![64, 128, 256],
            test_functions: 4,
            test_degree: 3,
            seed: 1,
            field_resolution: None,
            epsilon: 0.01,
            extension_constant: 1.0,
            energy_range: None,
            bins: crate::extension::DEFAULT_BINS,
            arcsine_bins: 32,
            level_sets: vec![[0.0, 0.1], [0.5, 0.05], [1.0, 0.02], [-1.5, 0.01]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

/// A validated configuration together with the data derived from it.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Hex SHA-256 of the file bytes.
    pub hash: String,
    /// Directory relative paths are resolved against.
    pub base: PathBuf,
    pub params: ModelParams,
    pub schedule: ScaleSchedule,
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl LoadedConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_bytes(&bytes, base)
    }

    pub fn from_bytes(bytes: &[u8], base: PathBuf) -> Result<Self, RunError> {
        let text = std::str::from_utf8(bytes).map_err(|e| RunError::Config(format!("config is not UTF-8: {e}")))?;
        let config: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        config.validate()?;
        let potential_path = base.join(&config.model.potential);
        if !potential_path.is_file() {
            return Err(RunError::Config(format!(
                "potential file {} does not exist",
                potential_path.display()
            )));
        }
        let potential = PotentialSpec::load(&potential_path).map_err(|e| RunError::Config(e.to_string()))?;
        let m = &config.model;
        let params = ModelParams::new(potential, m.coupling, m.frequency.clone(), m.phase.clone())
            .map_err(|e| RunError::Config(e.to_string()))?;
        let schedule = ScaleSchedule::new(config.schedule.r1, config.schedule.growth, m.coupling, config.schedule.levels)
            .map_err(|e| RunError::Config(e.to_string()))?;
        Ok(Self {
            hash: config_hash(bytes),
            base,
            params,
            schedule,
            config,
        })
    }

    pub fn multiscale(&self) -> MultiscaleConfig {
        self.multiscale_for(self.params.coupling)
    }

    /// The multiscale configuration with the schedule rebuilt at `coupling`.
    pub fn multiscale_for(&self, coupling: f64) -> MultiscaleConfig {
        let a = &self.config.analysis;
        let s = &self.config.schedule;
        MultiscaleConfig {
            schedule: ScaleSchedule::new(s.r1, s.growth, coupling, s.levels).expect("validated schedule"),
            kappa: a.kappa,
            rho: a.rho,
            continuation: ContinuationConfig {
                suitability: SuitabilityParams::new(a.gamma, a.tau),
                window: a.window,
                simplicity: a.simplicity,
                require_scan: a.require_scan,
                scan_step: None,
            },
        }
    }

    pub fn couplings(&self) -> Vec<f64> {
        if self.config.model.couplings.is_empty() {
            vec![self.params.coupling]
        } else {
            self.config.model.couplings.clone()
        }
    }

    pub fn field_resolution(&self) -> usize {
        let a = &self.config.analysis;
        a.field_resolution.unwrap_or_else(|| *a.grids.last().expect("validated grids"))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        let a = &self.analysis;
        let positive = [
            ("gamma", a.gamma),
            ("tau", a.tau),
            ("duality_tolerance", a.duality_tolerance),
            ("epsilon", a.epsilon),
            ("extension_constant", a.extension_constant),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("analysis.{name} must be positive, got {v}"));
            }
        }
        if let Some(k) = a.kappa.filter(|k| !(*k > 0.0 && k.is_finite())) {
            return bad(format!("analysis.kappa must be positive, got {k}"));
        }
        match a.window {
            WindowRule::Fixed(w) if !(w > 0.0) => return bad(format!("analysis.window must be positive, got {w}")),
            _ => {}
        }
        match a.simplicity {
            SimplicityRule::Fixed(w) if !(w > 0.0) => {
                return bad(format!("analysis.simplicity must be positive, got {w}"))
            }
            _ => {}
        }
        if a.grids.is_empty() {
            return bad("analysis.grids is empty".into());
        }
        if let Some(n) = a.grids.iter().chain(&a.field_resolution).find(|&&n| n < 2) {
            return bad(format!("grid resolution {n} is below 2"));
        }
        if a.bins == 0 || a.arcsine_bins == 0 || a.bloch_phases == 0 || a.test_functions == 0 {
            return bad("analysis.bins, arcsine_bins, bloch_phases and test_functions must be positive".into());
        }
        if let Some([lo, hi]) = a.energy_range {
            if !(lo < hi) {
                return bad(format!("analysis.energy_range [{lo}, {hi}] is empty"));
            }
        }
        if let Some(p) = a.level_sets.iter().find(|p| !(p[1] > 0.0)) {
            return bad(format!("level-set half-width must be positive, got {}", p[1]));
        }
        if let Some(c) = self.model.couplings.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return bad(format!("model.couplings entry {c} is not positive"));
        }
        if self.output.formats.is_empty() {
            return bad("output.formats is empty".into());
        }
        Ok(())
    }
}
