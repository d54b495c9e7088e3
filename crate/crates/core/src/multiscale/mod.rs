//! Multi-scale continuation of a simple eigenvalue of the dual operator
//! from `Λ_{R_1}(0)` through a growing sequence of boxes.

mod continuation;
mod field;
mod goodset;
mod initial;
mod refine;

pub use continuation::{
    continuation_step, run_multiscale, suitability_scan, ContinuationConfig, LevelContract,
    MultiscaleConfig, ScanReport, ScannedBox, SimplicityRule, Trajectory, WindowRule,
};
pub use field::{NodeSample, TrajectoryField};
pub use goodset::{eigenvalue_gradient, good_set_swap, SwapEstimate};
pub use initial::{
    initial_step, kappa_for, kappa_separation, separation, GoodSetEstimate, KAPPA_LADDER_DEPTH,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{Site, SiteSet};
use crate::operator::OperatorError;
use crate::spectral::SpectralError;

#[derive(Debug, Error, PartialEq)]
pub enum MultiscaleError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("no κ ≥ 2^-{depth} reaches the measure target 1 - {epsilon}")]
    NoSeparation { epsilon: f64, depth: u32 },
    #[error("{count} eigenvalues in the initial window {window:?}")]
    NotSimple { count: usize, window: (f64, f64), nearby: Vec<f64> },
    #[error("bound violated: {0}")]
    BoundViolated(String),
    #[error("no eigenvalue within {window:e} of {energy}")]
    NoEigenvalueInWindow { energy: f64, window: f64, nearby: Vec<f64> },
    #[error("eigenvalue {energy} is not {radius:e}-simple")]
    NotSimpleAtNewScale { energy: f64, radius: f64, nearby: Vec<f64> },
    #[error("scale regime violated: {0}")]
    RegimeViolated(String),
    #[error("suitability scan failed on {failures} of {total} boxes")]
    ScanFailed { failures: usize, total: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// How `R_j` is obtained from `R_{j−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// `R_j = R_{j−1}^p`.
    Power(u32),
    /// `R_j = m · R_{j−1}`.
    Geometric(usize),
}

/// Radii `R_j` and simplicity radii `δ_j` for `j = 1..=J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub r1: usize,
    pub growth: Growth,
    pub coupling: f64,
    pub levels: usize,
    radii: Vec<usize>,
    deltas: Vec<f64>,
}

impl ScaleSchedule {
    pub fn new(r1: usize, growth: Growth, coupling: f64, levels: usize) -> Result<Self, MultiscaleError> {
        let bad = |m: String| Err(MultiscaleError::InvalidSchedule(m));
        if r1 == 0 {
            return bad("R_1 must be at least 1".into());
        }
        if levels == 0 {
            return bad("at least one level is required".into());
        }
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return bad(format!("coupling {coupling} is not a nonnegative number"));
        }
        match growth {
            Growth::Power(p) if p < 2 => return bad(format!("exponent {p} < 2")),
            Growth::Power(_) if r1 < 2 && levels > 1 => {
                return bad("R_1 = 1 is a fixed point of R ↦ R^p".into())
            }
            Growth::Geometric(m) if m < 2 => return bad(format!("factor {m} < 2")),
            _ => {}
        }
        let mut radii = vec![r1];
        for j in 1..levels {
            let prev = radii[j - 1];
            let next = match growth {
                Growth::Power(p) => prev.checked_pow(p),
                Growth::Geometric(m) => prev.checked_mul(m),
            };
            match next {
                Some(r) => radii.push(r),
                None => return bad(format!("R_{} overflows", j + 1)),
            }
        }
        let head = coupling.powf(1.0 / 20.0);
        let deltas = (0..levels)
            .map(|j| {
                if j == 0 {
                    head
                } else {
                    head * (-(radii[j - 1] as f64).sqrt()).exp()
                }
            })
            .collect();
        Ok(Self {
            r1,
            growth,
            coupling,
            levels,
            radii,
            deltas,
        })
    }

    /// The schedule with `R_j = R_{j−1}^{10}`.
    pub fn asymptotic(r1: usize, coupling: f64, levels: usize) -> Result<Self, MultiscaleError> {
        Self::new(r1, Growth::Power(10), coupling, levels)
    }

    pub fn is_asymptotic(&self) -> bool {
        self.growth == Growth::Power(10)
    }

    pub fn radii(&self) -> &[usize] {
        &self.radii
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    /// `R_j` for `j ≥ 1`.
    pub fn radius(&self, j: usize) -> usize {
        self.radii[j - 1]
    }

    /// `δ_j` for `j ≥ 1`.
    pub fn delta(&self, j: usize) -> f64 {
        self.deltas[j - 1]
    }
}

/// How the sub-box radius `ρ` is chosen for a continuation from `r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoRule {
    /// `max(1, ⌊r/8⌋)`.
    #[default]
    Desk,
    /// `max(1, ⌊(r/2)^{1/C_1}⌋)`.
    Asymptotic { c1: f64 },
    Fixed(usize),
}

impl RhoRule {
    pub fn rho(&self, r: usize) -> usize {
        match *self {
            RhoRule::Desk => (r / 8).max(1),
            RhoRule::Asymptotic { c1 } => ((r as f64 / 2.0).powf(1.0 / c1).floor() as usize).max(1),
            RhoRule::Fixed(rho) => rho,
        }
    }
}

/// A certified eigenpair of `Ĥ^{Λ_R(0)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCertificate {
    pub level: usize,
    pub radius: usize,
    pub dim: usize,
    pub energy: f64,
    /// Unit eigenvector in the lexicographic enumeration of `Λ_R(0)`.
    pub psi: Vec<f64>,
    pub simplicity_radius: f64,
    pub residual: f64,
    pub matrix_norm: f64,
    /// `|E_j − E_{j−1}|`, with `E_0 = Σ 2cos(2π x_j)`.
    pub energy_diff: f64,
    /// `‖ψ_j − ψ_{j−1}‖` with the previous vector zero-padded and `ψ_0 = δ_0`.
    pub vector_diff: f64,
    pub l1_norm: f64,
    /// Whether the differences come from the componentwise refinement
    /// rather than subtraction of dense eigenpairs.
    pub refined: bool,
    pub asymptotic_regime: bool,
}

impl EigenCertificate {
    pub fn sites(&self) -> SiteSet {
        SiteSet::centered_cube(self.dim, self.radius)
    }

    pub fn value_at(&self, n: &[i64]) -> f64 {
        self.sites().index_of(n).map_or(0.0, |i| self.psi[i])
    }

    /// `ψ` restricted to its support above `tol`, as `(site, value)` pairs.
    pub fn support(&self, tol: f64) -> Vec<(Site, f64)> {
        let sites = self.sites();
        sites
            .sites()
            .iter()
            .zip(&self.psi)
            .filter(|(_, v)| v.abs() > tol)
            .map(|(s, &v)| (s.clone(), v))
            .collect()
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
