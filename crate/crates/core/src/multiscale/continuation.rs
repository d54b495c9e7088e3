//! Annulus suitability scans, the continuation step and the full run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::refine::{leakage, refine};
use super::{initial_step, kappa_for, norm2, EigenCertificate, MultiscaleError, RhoRule, ScaleSchedule};
use crate::lattice::{sup_norm, Cube, Site};
use crate::model::ModelParams;
use crate::operator::build_dual;
use crate::spectral::{certify_simple, eig_sym, test_suitability, SuitabilityParams, SuitabilityReport};

const AGREEMENT_SLACK: f64 = 1e-10;

/// Half-width of the window searched for the continued eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    /// `e^{−γr/250}`.
    Asymptotic,
    Fixed(f64),
}

/// Radius at which the continued eigenvalue must be simple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplicityRule {
    /// `e^{−300γρ}`.
    Asymptotic,
    /// `δ_j` of the schedule.
    Schedule,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub suitability: SuitabilityParams,
    pub window: WindowRule,
    pub simplicity: SimplicityRule,
    /// Abort when some shell box fails the suitability test.
    pub require_scan: bool,
    /// Spacing of scanned box centers; `None` means `ρ`.
    pub scan_step: Option<usize>,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            suitability: SuitabilityParams::new(0.4, 0.5),
            window: WindowRule::Asymptotic,
            simplicity: SimplicityRule::Asymptotic,
            require_scan: false,
            scan_step: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScannedBox {
    pub center: Site,
    pub pass: bool,
    pub report: Option<SuitabilityReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub energy: f64,
    pub rho: usize,
    pub pass: bool,
    pub failures: usize,
    pub boxes: Vec<ScannedBox>,
}

/// Tests `Λ_ρ(n)` for `(γ,τ)`-suitability at `E` for every center `n` with
/// `r/2 ≤ |n|_∞ ≤ R` whose coordinates are multiples of `step`.
pub fn suitability_scan(
    params: &ModelParams,
    energy: f64,
    inner: usize,
    outer: usize,
    rho: usize,
    suitability: SuitabilityParams,
    step: Option<usize>,
) -> ScanReport {
    let step = step.unwrap_or(rho).max(1) as i64;
    let centers: Vec<Site> = Cube::origin(params.dim(), outer)
        .sites()
        .into_iter()
        .filter(|n| 2 * sup_norm(n) >= inner as i64 && n.iter().all(|c| c % step == 0))
        .collect();
    let boxes: Vec<ScannedBox> = centers
        .into_par_iter()
        .map(|center| {
            let outcome = build_dual(params, center.clone(), rho)
                .map_err(|e| e.to_string())
                .and_then(|b| test_suitability(&b, energy, suitability).map_err(|e| e.to_string()));
            match outcome {
                Ok(report) => ScannedBox {
                    center,
                    pass: report.pass,
                    report: Some(report),
                    error: None,
                },
                Err(e) => ScannedBox {
                    center,
                    pass: false,
                    report: None,
                    error: Some(e),
                },
            }
        })
        .collect();
    let failures = boxes.iter().filter(|b| !b.pass).count();
    ScanReport {
        energy,
        rho,
        pass: failures == 0,
        failures,
        boxes,
    }
}

fn nearby(values: &[f64], e: f64, width: f64) -> Vec<f64> {
    values.iter().copied().filter(|v| (v - e).abs() <= width).collect()
}

/// Continues `prev` from `Λ_r(0)` to `Λ_R(0)`.
///
/// Accepted regimes are `1000ρ ≤ r ≤ R/1000` (flagged as asymptotic regime) and
/// `1 ≤ ρ`, `3ρ ≤ r`, `2r ≤ R`.
pub fn continuation_step(
    params: &ModelParams,
    prev: &EigenCertificate,
    radius: usize,
    rho: usize,
    config: &ContinuationConfig,
    schedule_delta: f64,
) -> Result<(EigenCertificate, ScanReport), MultiscaleError> {
    let r = prev.radius;
    let asymptotic_regime = rho >= 1 && 1000 * rho <= r && 1000 * r <= radius;
    let desk_regime = rho >= 1 && 3 * rho <= r && 2 * r <= radius;
    if !(asymptotic_regime || desk_regime) {
        return Err(MultiscaleError::RegimeViolated(format!(
            "ρ = {rho}, r = {r}, R = {radius}"
        )));
    }
    let gamma = config.suitability.gamma;
    let scan = suitability_scan(params, prev.energy, r, radius, rho, config.suitability, config.scan_step);
    if config.require_scan && !scan.pass {
        return Err(MultiscaleError::ScanFailed {
            failures: scan.failures,
            total: scan.boxes.len(),
        });
    }

    let window = match config.window {
        WindowRule::Asymptotic => (-gamma * r as f64 / 250.0).exp(),
        WindowRule::Fixed(w) => w,
    };
    let delta = match config.simplicity {
        SimplicityRule::Asymptotic => (-300.0 * gamma * rho as f64).exp(),
        SimplicityRule::Schedule => schedule_delta,
        SimplicityRule::Fixed(d) => d,
    };
    if !(delta > 0.0) {
        return Err(MultiscaleError::InvalidSchedule(format!(
            "simplicity radius {delta} is not positive"
        )));
    }

    let dim = params.dim();
    let b = build_dual(params, vec![0; dim], radius)?;
    let spectrum = eig_sym(&b)?;
    let idx = spectrum.nearest(prev.energy).expect("nonempty box");
    let mut energy = spectrum.values[idx];
    let context = window.max(delta).max(0.5);
    if (energy - prev.energy).abs() > window {
        return Err(MultiscaleError::NoEigenvalueInWindow {
            energy: prev.energy,
            window,
            nearby: nearby(&spectrum.values, prev.energy, context),
        });
    }
    if !certify_simple(&spectrum, energy, delta).simple {
        return Err(MultiscaleError::NotSimpleAtNewScale {
            energy,
            radius: delta,
            nearby: nearby(&spectrum.values, prev.energy, context),
        });
    }

    let old_sites = prev.sites();
    let phi = old_sites.transfer(&prev.psi, &b.sites);
    let mut psi = spectrum.vector(idx);
    let overlap: f64 = psi.iter().zip(&phi).map(|(a, b)| a * b).sum();
    if overlap < 0.0 {
        psi.iter_mut().for_each(|v| *v = -*v);
    }

    let norm = spectrum.norm();
    let pivot = (0..phi.len())
        .max_by(|&a, &b| phi[a].abs().total_cmp(&phi[b].abs()))
        .expect("nonempty box");
    let u: Vec<f64> = phi.iter().map(|v| v / phi[pivot]).collect();
    let inside: Vec<bool> = b.sites.sites().iter().map(|s| old_sites.contains(s)).collect();
    let leak = leakage(&b.matrix, &u, &inside);
    let refined = refine(&b.matrix, prev.energy, &u, &leak, pivot)
        .map(|mut r| {
            if phi[pivot] < 0.0 {
                r.psi.iter_mut().for_each(|v| *v = -*v);
            }
            r
        })
        .filter(|r| {
            let gap: Vec<f64> = r.psi.iter().zip(&psi).map(|(a, b)| a - b).collect();
            (prev.energy + r.delta_e - energy).abs() <= AGREEMENT_SLACK * (1.0 + norm) && norm2(&gap) <= 1e-8
        });
    let (energy_diff, vector_diff) = match &refined {
        Some(r) => {
            energy = prev.energy + r.delta_e;
            psi.clone_from(&r.psi);
            (r.delta_e.abs(), r.vector_diff)
        }
        None => {
            let d: Vec<f64> = psi.iter().zip(&phi).map(|(a, b)| a - b).collect();
            ((energy - prev.energy).abs(), norm2(&d))
        }
    };
    let residual = norm2(&b.shifted_apply(energy, &psi));
    let cert = EigenCertificate {
        level: prev.level + 1,
        radius,
        dim,
        energy,
        l1_norm: psi.iter().map(|v| v.abs()).sum(),
        psi,
        simplicity_radius: delta,
        residual,
        matrix_norm: norm,
        energy_diff,
        vector_diff,
        refined: refined.is_some(),
        asymptotic_regime,
    };
    Ok((cert, scan))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiscaleConfig {
    pub schedule: ScaleSchedule,
    /// Initial separation; `None` picks the ladder value below the
    /// separation on `Λ_{R_1}(0)`.
    pub kappa: Option<f64>,
    pub rho: RhoRule,
    pub continuation: ContinuationConfig,
}

/// Contracts `|E_j − E_{j−1}| ≤ δ_j^{10}`, `‖ψ_j − ψ_{j−1}‖ ≤ δ_j^3` and
/// `‖ψ_j‖_{ℓ¹} ≤ 2` for one level. Only enforced for the asymptotic schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelContract {
    pub level: usize,
    pub enforced: bool,
    pub energy_ok: bool,
    pub vector_ok: bool,
    pub l1_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kappa: f64,
    pub certificates: Vec<EigenCertificate>,
    pub scans: Vec<ScanReport>,
    pub contracts: Vec<LevelContract>,
    /// Error that stopped the run before the last level.
    pub truncated: Option<String>,
}

impl Trajectory {
    pub fn violations(&self) -> Vec<&LevelContract> {
        self.contracts
            .iter()
            .filter(|c| c.enforced && !(c.energy_ok && c.vector_ok && c.l1_ok))
            .collect()
    }

    pub fn last(&self) -> &EigenCertificate {
        self.certificates.last().expect("trajectory has a first level")
    }
}

fn contract(schedule: &ScaleSchedule, cert: &EigenCertificate) -> LevelContract {
    let delta = schedule.delta(cert.level);
    LevelContract {
        level: cert.level,
        enforced: schedule.is_asymptotic(),
        energy_ok: cert.energy_diff <= delta.powi(10),
        vector_ok: cert.vector_diff <= delta.powi(3),
        l1_ok: cert.l1_norm <= 2.0,
    }
}

/// Initial step followed by continuation through every scale of the
/// schedule. A failure after the first level truncates the trajectory.
pub fn run_multiscale(params: &ModelParams, config: &MultiscaleConfig) -> Result<Trajectory, MultiscaleError> {
    let schedule = &config.schedule;
    let r1 = schedule.radius(1);
    let kappa = match config.kappa {
        Some(k) => k,
        None => kappa_for(&params.phase, &params.frequency, r1).ok_or(MultiscaleError::NoSeparation {
            epsilon: 0.0,
            depth: super::KAPPA_LADDER_DEPTH,
        })?,
    };
    let first = initial_step(params, r1, kappa)?;
    let mut traj = Trajectory {
        kappa,
        contracts: vec![contract(schedule, &first)],
        certificates: vec![first],
        scans: Vec::new(),
        truncated: None,
    };
    for j in 2..=schedule.levels {
        let prev = traj.last();
        let rho = config.rho.rho(prev.radius);
        match continuation_step(params, prev, schedule.radius(j), rho, &config.continuation, schedule.delta(j)) {
            Ok((cert, scan)) => {
                traj.contracts.push(contract(schedule, &cert));
                traj.certificates.push(cert);
                traj.scans.push(scan);
            }
            Err(e) => {
                traj.truncated = Some(format!("level {j}: {e}"));
                break;
            }
        }
    }
    Ok(traj)
}
