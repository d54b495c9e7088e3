//! Aubry duality: rational Floquet conjugation, translated eigenfunction
//! families and the intertwiner `Q`.

mod family;
mod q;
mod rational;

pub use family::{
    build_family, distinctness_check, eigen_residuals, gram_check, gram_envelope, Collision, DistinctnessReport,
    EigenfunctionFamily, FamilyMember, GramReport, MemberResidual,
};
pub use q::{intertwining_residual, q_isometry_check, IsometryReport, QAssembly, TrigPolynomial};
pub use rational::{
    conjugation_check_exact, dual_fiber, fourier_conjugation_check, hausdorff, primal_fiber, rationalize,
    ConjugationReport, RationalFrequency, MAX_DENOMINATOR,
};

use thiserror::Error;

use crate::lattice::Site;
use crate::operator::OperatorError;
use crate::spectral::SpectralError;

#[derive(Debug, Error, PartialEq)]
pub enum DualityError {
    #[error("irrational frequency: {0}")]
    IrrationalFrequency(String),
    #[error("fiber of size {size} exceeds the dense cap {cap}")]
    FiberTooLarge { size: usize, cap: usize },
    #[error("no label lands in the good set")]
    EmptyFamily,
    #[error("working box Λ_{radius} does not hold member {label:?} (needs {needed})")]
    BoxTooSmall { label: Site, radius: usize, needed: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
