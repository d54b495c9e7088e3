//! Dense spectral decomposition, δ-simplicity, Green's functions and the
//! (γ,τ)-suitability predicate.

mod solutions;

pub use solutions::{
    annulus_bound, annulus_resolvent_norm, decay_iteration_check, poisson_expand,
    truncate_test_function, DecayCheck, TruncationOutcome,
};

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{sup_dist, Site};
use crate::operator::{BoxRestriction, OperatorError};

/// Relative tolerance below which a shift is treated as an eigenvalue.
pub const SINGULAR_SHIFT_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("symmetric eigensolver did not converge on a {0}x{0} matrix")]
    ConvergenceFailure(usize),
    #[error("energy {energy} is within {gap:e} of eigenvalue {eigenvalue}")]
    SingularShift { energy: f64, eigenvalue: f64, gap: f64 },
    #[error("restriction is not a cube")]
    NotACube,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Ascending eigenvalues with an orthonormal family of eigenvectors stored
/// column-wise in the same order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Operator norm of the decomposed matrix.
    pub fn norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i).iter().copied().collect()
    }

    /// Index of the eigenvalue closest to `e`; ties go to the smaller one.
    pub fn nearest(&self, e: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            let d = (v - e).abs();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Indices of eigenvalues in the closed window `[e − r, e + r]`.
    pub fn in_window(&self, e: f64, r: f64) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= e - r && v <= e + r)
            .map(|(i, _)| i)
            .collect()
    }

    /// `min_i |λ_i − e|`.
    pub fn distance(&self, e: f64) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, v| a.min((v - e).abs()))
    }
}

/// Full decomposition of a box restriction.
pub fn eig_sym(b: &BoxRestriction) -> Result<Spectrum, SpectralError> {
    eig_matrix(&b.matrix)
}

pub fn eig_matrix(m: &DMatrix<f64>) -> Result<Spectrum, SpectralError> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Spectrum {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or(SpectralError::ConvergenceFailure(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Spectrum { values, vectors })
}

/// Outcome of the δ-simplicity test `tr P_{[E−δ,E+δ]}(A) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplicityCertificate {
    pub energy: f64,
    pub radius: f64,
    pub count: usize,
    pub simple: bool,
}

/// Counts eigenvalues in the closed interval `[E−δ, E+δ]`. An eigenvalue
/// sitting exactly on an endpoint counts, so the result can flip under a
/// one-ulp change of `E` or `δ`.
pub fn certify_simple(spectrum: &Spectrum, energy: f64, radius: f64) -> SimplicityCertificate {
    assert!(radius > 0.0, "simplicity radius must be positive");
    let count = spectrum.in_window(energy, radius).len();
    SimplicityCertificate {
        energy,
        radius,
        count,
        simple: count == 1,
    }
}

/// Fails with `SingularShift` when `E` is within `1e−12(1+‖H‖)` of the spectrum.
pub fn check_shift(spectrum: &Spectrum, energy: f64) -> Result<(), SpectralError> {
    let tol = SINGULAR_SHIFT_TOL * (1.0 + spectrum.norm());
    if let Some(i) = spectrum.nearest(energy) {
        let gap = (spectrum.values[i] - energy).abs();
        if gap < tol {
            return Err(SpectralError::SingularShift {
                energy,
                eigenvalue: spectrum.values[i],
                gap,
            });
        }
    }
    Ok(())
}

/// `‖(H − E)^{-1}‖ = 1 / dist(E, σ(H))`.
pub fn resolvent_norm(spectrum: &Spectrum, energy: f64) -> Result<f64, SpectralError> {
    check_shift(spectrum, energy)?;
    Ok(1.0 / spectrum.distance(energy))
}

/// `G(E; n, m) = ⟨δ_n, (H − E)^{-1} δ_m⟩` for every pair of the box.
pub fn greens(b: &BoxRestriction, energy: f64) -> Result<DMatrix<f64>, SpectralError> {
    let spectrum = eig_sym(b)?;
    greens_from_spectrum(&spectrum, energy)
}

pub fn greens_from_spectrum(spectrum: &Spectrum, energy: f64) -> Result<DMatrix<f64>, SpectralError> {
    check_shift(spectrum, energy)?;
    let n = spectrum.len();
    let mut scaled = spectrum.vectors.clone();
    for (j, &v) in spectrum.values.iter().enumerate() {
        let w = 1.0 / (v - energy);
        scaled.column_mut(j).scale_mut(w);
    }
    let g = &scaled * spectrum.vectors.transpose();
    debug_assert_eq!(g.nrows(), n);
    Ok(g)
}

/// How `|n − m|` is measured in the decay condition of suitability. The
/// defining inequality is written without a subscript; the sup metric
/// matches the geometry of `Λ_R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DecayMetric {
    #[default]
    Sup,
    Taxicab,
}

impl DecayMetric {
    pub fn distance(self, n: &[i64], m: &[i64]) -> i64 {
        match self {
            DecayMetric::Sup => sup_dist(n, m),
            DecayMetric::Taxicab => n.iter().zip(m).map(|(a, b)| (a - b).abs()).sum(),
        }
    }
}

/// The metric used unless a caller overrides it.
pub const SUITABILITY_METRIC: DecayMetric = DecayMetric::Sup;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityParams {
    pub gamma: f64,
    pub tau: f64,
    #[serde(default)]
    pub metric: DecayMetric,
}

impl SuitabilityParams {
    pub fn new(gamma: f64, tau: f64) -> Self {
        Self {
            gamma,
            tau,
            metric: SUITABILITY_METRIC,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstPair {
    pub n: Site,
    pub m: Site,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityReport {
    pub gamma: f64,
    pub tau: f64,
    pub radius: usize,
    pub resolvent_norm: f64,
    pub resolvent_bound: f64,
    pub resolvent_ok: bool,
    /// Pair with the largest ratio `|G(E;n,m)| / e^{−γ|n−m|}` among
    /// `|n − m| ≥ R/2`.
    pub worst_pair: Option<WorstPair>,
    pub decay_ok: bool,
    pub pass: bool,
}

/// Literal evaluation of both suitability conditions on a cube `Λ_R(c)`:
/// `‖(H − E)^{-1}‖ ≤ e^{R^τ}` and `|G(E;n,m)| ≤ e^{−γ|n−m|}` whenever
/// `|n − m| ≥ R/2`.
pub fn test_suitability(
    b: &BoxRestriction,
    energy: f64,
    params: SuitabilityParams,
) -> Result<SuitabilityReport, SpectralError> {
    let radius = b.cube().ok_or(SpectralError::NotACube)?.radius;
    let spectrum = eig_sym(b)?;
    let norm = resolvent_norm(&spectrum, energy)?;
    let g = greens_from_spectrum(&spectrum, energy)?;
    let resolvent_bound = (radius as f64).powf(params.tau).exp();
    let resolvent_ok = norm <= resolvent_bound;

    let half = radius as f64 / 2.0;
    let sites = b.sites.sites();
    let mut worst: Option<(f64, WorstPair)> = None;
    let mut decay_ok = true;
    for (i, n) in sites.iter().enumerate() {
        for (j, m) in sites.iter().enumerate() {
            let dist = params.metric.distance(n, m);
            if (dist as f64) < half {
                continue;
            }
            let bound = (-params.gamma * dist as f64).exp();
            let value = g[(i, j)].abs();
            if value > bound {
                decay_ok = false;
            }
            let ratio = value / bound;
            if worst.as_ref().is_none_or(|(r, _)| ratio > *r) {
                worst = Some((
                    ratio,
                    WorstPair {
                        n: n.clone(),
                        m: m.clone(),
                        value,
                        bound,
                    },
                ));
            }
        }
    }
    Ok(SuitabilityReport {
        gamma: params.gamma,
        tau: params.tau,
        radius,
        resolvent_norm: norm,
        resolvent_bound,
        resolvent_ok,
        worst_pair: worst.map(|(_, w)| w),
        decay_ok,
        pass: resolvent_ok && decay_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SiteSet;

    fn box_of(m: DMatrix<f64>) -> BoxRestriction {
        let n = m.nrows();
        BoxRestriction {
            sites: SiteSet::from_sites(1, (0..n as i64).map(|i| vec![i])),
            matrix: m,
        }
    }

    #[test]
    fn diagonal_spectrum() {
        let s = eig_sym(&box_of(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            2.0, -1.0, 0.0,
        ]))))
        .unwrap();
        assert_eq!(s.values, vec![-1.0, 0.0, 2.0]);
        assert_eq!(s.vector(0)[1].abs(), 1.0);
        assert_eq!(s.vector(2)[0].abs(), 1.0);
    }

    #[test]
    fn swap_matrix_spectrum() {
        let s = eig_matrix(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((s.values[0] + 1.0).abs() < 1e-15);
        assert!((s.values[1] - 1.0).abs() < 1e-15);
    }

    fn spec_of(values: &[f64]) -> Spectrum {
        Spectrum {
            values: values.to_vec(),
            vectors: DMatrix::identity(values.len(), values.len()),
        }
    }

    #[test]
    fn simplicity_examples() {
        let c = certify_simple(&spec_of(&[0.0, 1.0, 3.0]), 1.0, 0.5);
        assert_eq!((c.count, c.simple), (1, true));
        let c = certify_simple(&spec_of(&[0.0, 1.0, 1.2]), 1.0, 0.5);
        assert_eq!((c.count, c.simple), (2, false));
        let c = certify_simple(&spec_of(&[0.0, 1.0, 3.0]), 2.0, 0.5);
        assert_eq!((c.count, c.simple), (0, false));
        // closed interval: endpoints count
        let c = certify_simple(&spec_of(&[0.0, 1.0, 1.5]), 1.0, 0.5);
        assert_eq!(c.count, 2);
    }

    #[test]
    fn greens_one_site() {
        let g = greens(&box_of(DMatrix::from_element(1, 1, 2.0)), 0.0).unwrap();
        assert!((g[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn greens_singular_shift() {
        let b = box_of(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert!(matches!(greens(&b, 1.0), Err(SpectralError::SingularShift { .. })));
        assert!(greens(&b, 1.0 + 1e-6).is_ok());
    }

    #[test]
    fn suitability_needs_cube() {
        let b = box_of(DMatrix::from_element(1, 1, 2.0));
        assert_eq!(
            test_suitability(&b, 0.0, SuitabilityParams::new(0.5, 0.5)).unwrap_err(),
            SpectralError::NotACube
        );
    }
}
