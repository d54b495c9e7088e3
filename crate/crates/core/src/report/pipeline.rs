//! One pipeline per subcommand.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::LoadedConfig;
use super::{RunError, Subcommand};
use crate::duality::{
    build_family, distinctness_check, eigen_residuals, fourier_conjugation_check, gram_check, gram_envelope,
    intertwining_residual, q_isometry_check, rationalize, ConjugationReport, DistinctnessReport, FamilyMember,
    GramReport, IsometryReport, MemberResidual, QAssembly, TrigPolynomial,
};
use crate::extension::{
    ac_coverage_report, arcsine_comparison, build_gamma_field, build_kappa_set, default_energy_grid, energy_grid,
    level_set_measure, ArcsineComparison, CoverageReport, GammaField, LevelSetEstimate,
};
use crate::grid::TorusGrid;
use crate::multiscale::{initial_step, kappa_for, run_multiscale, suitability_scan, ScaleSchedule, ScanReport, Trajectory, TrajectoryField};
use crate::operator::{build_dual, build_primal};
use crate::spectral::{eig_sym, SuitabilityParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSpectrum {
    pub radius: usize,
    pub energies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOutput {
    pub dual: BoxSpectrum,
    pub primal: BoxSpectrum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelScan {
    /// Continuation from `Λ_r(0)` to `Λ_R(0)`.
    pub from: usize,
    pub to: usize,
    pub scan: ScanReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityOutput {
    pub kappa: f64,
    /// Level-1 eigenvalue at which the shells are scanned.
    pub energy: f64,
    pub levels: Vec<LevelScan>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiscaleOutput {
    pub schedule: ScaleSchedule,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyOutput {
    pub coupling: f64,
    pub window: usize,
    pub members: Vec<FamilyMember>,
    pub gram: GramReport,
    pub envelope: f64,
    pub residuals: Vec<MemberResidual>,
    pub distinctness: DistinctnessReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwinerOutput {
    pub window: usize,
    pub good_fraction: f64,
    pub isometry: IsometryReport,
    pub intertwining: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualityOutput {
    /// Floquet comparison for a rational frequency.
    Rational { report: ConjugationReport, tolerance: f64, pass: bool },
    /// Family and intertwiner checks for an irrational frequency.
    Irrational {
        families: Vec<FamilyOutput>,
        intertwiner: Vec<IntertwinerOutput>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionOutput {
    pub resolution: usize,
    pub kappa_fraction: f64,
    /// Fraction of nodes whose trajectory reached the last level.
    pub good_fraction: f64,
    pub gamma: GammaField,
    pub properties_hold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcOutput {
    pub coverage: CoverageReport,
    pub level_sets: Vec<LevelSetEstimate>,
    /// Present for `d = 1` at `λ = 0`.
    pub arcsine: Option<ArcsineComparison>,
}

/// Everything a run produced except wall-clock timings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub run_id: String,
    pub config_hash: String,
    pub subcommand: Subcommand,
    pub spectrum: Option<SpectrumOutput>,
    pub suitability: Option<SuitabilityOutput>,
    pub multiscale: Option<MultiscaleOutput>,
    pub duality: Option<DualityOutput>,
    pub extension: Option<ExtensionOutput>,
    pub ac_estimate: Option<AcOutput>,
}

/// Seconds per stage.
pub type Timings = BTreeMap<String, f64>;

pub fn execute(cfg: &LoadedConfig, sub: Subcommand) -> Result<(ResultRecord, Timings), RunError> {
    let mut record = ResultRecord {
        run_id: format!("{}-{}", sub.name(), &cfg.hash[..12]),
        config_hash: cfg.hash.clone(),
        subcommand: sub,
        spectrum: None,
        suitability: None,
        multiscale: None,
        duality: None,
        extension: None,
        ac_estimate: None,
    };
    let mut timings = Timings::new();
    let mut timed = |name: &str, t: Instant| {
        timings.insert(name.to_string(), t.elapsed().as_secs_f64());
    };
    let all = sub == Subcommand::All;
    if all || sub == Subcommand::Spectrum {
        let t = Instant::now();
        record.spectrum = Some(spectrum(cfg)?);
        timed("spectrum", t);
    }
    if all || sub == Subcommand::Suitability {
        let t = Instant::now();
        record.suitability = Some(suitability(cfg)?);
        timed("suitability", t);
    }
    if all || sub == Subcommand::Multiscale {
        let t = Instant::now();
        record.multiscale = Some(multiscale(cfg)?);
        timed("multiscale", t);
    }
    if all || sub == Subcommand::Duality {
        let t = Instant::now();
        record.duality = Some(duality(cfg)?);
        timed("duality", t);
    }
    if all || sub == Subcommand::Extension || sub == Subcommand::AcEstimate {
        let t = Instant::now();
        let ext = extension(cfg)?;
        timed("extension", t);
        if all || sub == Subcommand::AcEstimate {
            let t = Instant::now();
            record.ac_estimate = Some(ac_estimate(cfg, &ext.gamma));
            timed("ac_estimate", t);
        }
        record.extension = Some(ext);
    }
    Ok((record, timings))
}

fn pipeline(stage: &str) -> impl Fn(String) -> RunError + '_ {
    move |e| RunError::Pipeline(format!("{stage}: {e}"))
}

fn spectrum(cfg: &LoadedConfig) -> Result<SpectrumOutput, RunError> {
    let radius = cfg.config.analysis.spectrum_radius.unwrap_or(cfg.schedule.radius(1));
    let dim = cfg.params.dim();
    let err = pipeline("spectrum");
    let dual = build_dual(&cfg.params, vec![0; dim], radius).map_err(|e| err(e.to_string()))?;
    let primal = build_primal(&cfg.params, vec![0; dim], radius).map_err(|e| err(e.to_string()))?;
    let energies = |b| eig_sym(b).map(|s| s.values).map_err(|e| err(e.to_string()));
    Ok(SpectrumOutput {
        dual: BoxSpectrum {
            radius,
            energies: energies(&dual)?,
        },
        primal: BoxSpectrum {
            radius,
            energies: energies(&primal)?,
        },
    })
}

fn suitability(cfg: &LoadedConfig) -> Result<SuitabilityOutput, RunError> {
    let err = pipeline("suitability");
    let ms = cfg.multiscale();
    let r1 = cfg.schedule.radius(1);
    let kappa = match ms.kappa {
        Some(k) => k,
        None => kappa_for(&cfg.params.phase, &cfg.params.frequency, r1)
            .ok_or_else(|| err(format!("W(x) is not separated on Λ_{r1}(0)")))?,
    };
    let first = initial_step(&cfg.params, r1, kappa).map_err(|e| err(e.to_string()))?;
    let a = &cfg.config.analysis;
    let params = SuitabilityParams::new(a.gamma, a.tau);
    let levels: Vec<LevelScan> = cfg
        .schedule
        .radii()
        .windows(2)
        .map(|w| LevelScan {
            from: w[0],
            to: w[1],
            scan: suitability_scan(&cfg.params, first.energy, w[0], w[1], ms.rho.rho(w[0]), params, None),
        })
        .collect();
    Ok(SuitabilityOutput {
        kappa,
        energy: first.energy,
        pass: levels.iter().all(|l| l.scan.pass),
        levels,
    })
}

fn multiscale(cfg: &LoadedConfig) -> Result<MultiscaleOutput, RunError> {
    let trajectory = run_multiscale(&cfg.params, &cfg.multiscale()).map_err(|e| pipeline("multiscale")(e.to_string()))?;
    Ok(MultiscaleOutput {
        schedule: cfg.schedule.clone(),
        trajectory,
    })
}

fn duality(cfg: &LoadedConfig) -> Result<DualityOutput, RunError> {
    let err = pipeline("duality");
    let a = &cfg.config.analysis;
    if rationalize(&cfg.params.frequency).is_ok() {
        let report = fourier_conjugation_check(&cfg.params, a.bloch_phases).map_err(|e| err(e.to_string()))?;
        return Ok(DualityOutput::Rational {
            pass: report.mismatch <= a.duality_tolerance,
            tolerance: a.duality_tolerance,
            report,
        });
    }
    let dim = cfg.params.dim();
    let resolution = *a.grids.last().expect("validated grids");
    let mut families = Vec::new();
    for coupling in cfg.couplings() {
        let params = cfg.params.with_coupling(coupling);
        let field = TrajectoryField::compute(&params, &cfg.multiscale_for(coupling), TorusGrid::new(dim, resolution));
        let family = build_family(&field, &params.phase, a.family_window).map_err(|e| err(e.to_string()))?;
        let working = field.radius() + a.family_window;
        let residuals = eigen_residuals(&family, &params, working).map_err(|e| err(e.to_string()))?;
        let distinctness = distinctness_check(&family, &params).map_err(|e| err(e.to_string()))?;
        families.push(FamilyOutput {
            coupling,
            window: a.family_window,
            gram: gram_check(&family),
            envelope: gram_envelope(coupling),
            members: family.members,
            residuals,
            distinctness,
        });
    }
    let window = a.q_window.unwrap_or(cfg.schedule.radius(cfg.schedule.levels));
    let tests: Vec<TrigPolynomial> = (0..a.test_functions as u64)
        .map(|i| TrigPolynomial::random(dim, a.test_degree, a.seed.wrapping_add(i)))
        .collect();
    let ms = cfg.multiscale();
    let intertwiner = a
        .grids
        .iter()
        .map(|&n| {
            let field = TrajectoryField::compute(&cfg.params, &ms, TorusGrid::new(dim, n));
            let assembly = QAssembly::new(field, window);
            IntertwinerOutput {
                window,
                good_fraction: assembly.good_fraction(),
                isometry: q_isometry_check(&assembly, &tests),
                intertwining: intertwining_residual(&assembly),
            }
        })
        .collect();
    Ok(DualityOutput::Irrational { families, intertwiner })
}

fn extension(cfg: &LoadedConfig) -> Result<ExtensionOutput, RunError> {
    let err = pipeline("extension");
    let a = &cfg.config.analysis;
    let grid = TorusGrid::new(cfg.params.dim(), cfg.field_resolution());
    let kset = build_kappa_set(grid, a.epsilon).map_err(|e| err(e.to_string()))?;
    let field = TrajectoryField::compute(&cfg.params, &cfg.multiscale(), grid);
    let gamma = build_gamma_field(&field, &kset, &cfg.schedule, a.extension_constant).map_err(|e| err(e.to_string()))?;
    Ok(ExtensionOutput {
        resolution: grid.resolution,
        kappa_fraction: kset.fraction,
        good_fraction: field.good_fraction(),
        properties_hold: gamma.properties_hold(),
        gamma,
    })
}

fn ac_estimate(cfg: &LoadedConfig, gamma: &GammaField) -> AcOutput {
    let a = &cfg.config.analysis;
    let dim = cfg.params.dim();
    let edges = match a.energy_range {
        Some([lo, hi]) => energy_grid(lo, hi, a.bins),
        None if a.bins == crate::extension::DEFAULT_BINS => default_energy_grid(dim),
        None => {
            let r = 2.0 * dim as f64 + 1.0;
            energy_grid(-r, r, a.bins)
        }
    };
    let arcsine = (dim == 1 && cfg.params.coupling == 0.0)
        .then(|| arcsine_comparison(&gamma.field, &energy_grid(-2.0, 2.0, a.arcsine_bins)));
    AcOutput {
        coverage: ac_coverage_report(&gamma.field, &edges),
        level_sets: a
            .level_sets
            .iter()
            .map(|&[e, s]| level_set_measure(&gamma.field, e, s))
            .collect(),
        arcsine,
    }
}
