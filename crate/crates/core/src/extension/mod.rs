//! Lipschitz extension by mollification, the eigenvalue field `γ` and its
//! level-set and pushforward estimates.

mod field;
mod gamma;
mod lipschitz;
mod measure;
mod mollifier;

pub use field::{chebyshev_distance, gradient_norms, GridField};
pub use gamma::{build_gamma_field, build_kappa_set, grad_w_norm, GammaField, GammaLevel, KappaSet, KAPPA_SET_DEPTH};
pub use lipschitz::{lipschitz_extension, ExtensionReport};
pub use measure::{
    ac_coverage_report, arcsine_comparison, arcsine_mass, default_energy_grid, energy_grid, level_set_constant, level_set_measure,
    ArcsineBin, ArcsineComparison, CoverageReport, HistogramBin, LevelSetEstimate, DEFAULT_BINS,
};
pub use mollifier::{DiscreteKernel, Mollifier};

use thiserror::Error;

use crate::operator::OperatorError;
use crate::spectral::SpectralError;

#[derive(Debug, Error, PartialEq)]
pub enum ExtensionError {
    #[error("the prescribed set is empty")]
    MaskEmpty,
    #[error("grid step {step:e} exceeds δ/12 = {limit:e}")]
    ResolutionTooCoarse { step: f64, limit: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value on the mask at node {0}")]
    NonFinite(usize),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
