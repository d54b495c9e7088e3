//! Finite-volume restrictions of the primal operator `H = Δ + λV` and the
//! dual operator `Ĥ = λT + W`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::lattice::{potential_w, shift_phase, Cube, Site, SiteSet};
use crate::model::{HoppingSpec, ModelParams};

/// Largest dense side length built by default.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Symmetry tolerance for assembled matrices (max-entry norm).
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("box has {side} sites, above the dense cap of {cap}")]
    BoxTooLarge { side: usize, cap: usize },
    #[error("assembled matrix is not symmetric (max deviation {0:e})")]
    Asymmetric(f64),
    #[error("dimension mismatch: operator is {expected}-dimensional, sites are {got}-dimensional")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A self-adjoint operator on `ℓ²(ℤ^d)` with finitely many hopping offsets.
pub trait LatticeOperator: Sync {
    fn dim(&self) -> usize;

    /// `⟨δ_n, H δ_n⟩`.
    fn diagonal(&self, n: &[i64]) -> f64;

    /// `⟨δ_n, H δ_{n+k}⟩` for `k ≠ 0`.
    fn hop(&self, n: &[i64], k: &[i64]) -> f64;

    /// Offsets `k ≠ 0` for which `hop` may be nonzero.
    fn offsets(&self) -> &[Site];
}

/// `Ĥ_{λ,α,x}ψ(n) = W(x + n⋆α)ψ(n) + λ Σ_k f̂(k) ψ(n+k)`.
///
/// A constant Fourier mode `f̂(0)` contributes `λ f̂(0)` to the diagonal.
pub struct DualOperator<'a> {
    params: &'a ModelParams,
    offsets: Vec<Site>,
    constant: f64,
}

impl<'a> DualOperator<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        let offsets = HoppingSpec::from_potential(&params.potential).offsets();
        let constant = params.potential.coefficient(&vec![0; params.dim()]);
        Self {
            params,
            offsets,
            constant,
        }
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }
}

impl LatticeOperator for DualOperator<'_> {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn diagonal(&self, n: &[i64]) -> f64 {
        let y = shift_phase(&self.params.phase, &self.params.frequency, n);
        potential_w(&y) + self.params.coupling * self.constant
    }

    fn hop(&self, _n: &[i64], k: &[i64]) -> f64 {
        self.params.coupling * self.params.potential.coefficient(k)
    }

    fn offsets(&self) -> &[Site] {
        &self.offsets
    }
}

/// `Hψ(n) = Σ_{|e|_1=1} ψ(n+e) + λ f(x + α⋆n) ψ(n)`.
pub struct PrimalOperator<'a> {
    params: &'a ModelParams,
    offsets: Vec<Site>,
}

impl<'a> PrimalOperator<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        let d = params.dim();
        let mut offsets = Vec::with_capacity(2 * d);
        for j in 0..d {
            for s in [-1i64, 1] {
                let mut e = vec![0; d];
                e[j] = s;
                offsets.push(e);
            }
        }
        Self { params, offsets }
    }
}

impl LatticeOperator for PrimalOperator<'_> {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn diagonal(&self, n: &[i64]) -> f64 {
        let y = shift_phase(&self.params.phase, &self.params.frequency, n);
        self.params.coupling * self.params.potential.evaluate(&y)
    }

    fn hop(&self, _n: &[i64], k: &[i64]) -> f64 {
        if k.iter().map(|c| c.abs()).sum::<i64>() == 1 {
            1.0
        } else {
            0.0
        }
    }

    fn offsets(&self) -> &[Site] {
        &self.offsets
    }
}

/// `H = λT + W` with arbitrary (possibly site-dependent) hopping and an
/// arbitrary potential sequence.
pub struct GeneralOperator<F> {
    dim: usize,
    coupling: f64,
    hopping: HoppingSpec,
    offsets: Vec<Site>,
    potential: F,
}

impl<F: Fn(&[i64]) -> f64 + Sync> GeneralOperator<F> {
    pub fn new(dim: usize, coupling: f64, hopping: HoppingSpec, potential: F) -> Self {
        let offsets = hopping.offsets();
        Self {
            dim,
            coupling,
            hopping,
            offsets,
            potential,
        }
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn hopping(&self) -> &HoppingSpec {
        &self.hopping
    }
}

impl<F: Fn(&[i64]) -> f64 + Sync> LatticeOperator for GeneralOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn diagonal(&self, n: &[i64]) -> f64 {
        (self.potential)(n)
    }

    fn hop(&self, n: &[i64], k: &[i64]) -> f64 {
        self.coupling * self.hopping.coefficient(n, k)
    }

    fn offsets(&self) -> &[Site] {
        &self.offsets
    }
}

/// A restriction `A^Λ` together with the enumeration of `Λ`.
#[derive(Clone, Debug)]
pub struct BoxRestriction {
    pub sites: SiteSet,
    pub matrix: DMatrix<f64>,
}

impl BoxRestriction {
    pub fn side(&self) -> usize {
        self.sites.len()
    }

    pub fn cube(&self) -> Option<&Cube> {
        self.sites.as_cube()
    }

    /// `max_{ij} |A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        max_asymmetry(&self.matrix)
    }

    /// `(A − E)v` for `v` in the site enumeration.
    pub fn shifted_apply(&self, e: f64, v: &[f64]) -> Vec<f64> {
        let n = self.side();
        (0..n)
            .map(|i| {
                (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum::<f64>() - e * v[i]
            })
            .collect()
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `A^Λ` for a generic operator, dropping hops that leave `Λ`.
pub fn restrict(op: &dyn LatticeOperator, sites: &SiteSet) -> Result<BoxRestriction, OperatorError> {
    restrict_with_cap(op, sites, DEFAULT_DENSE_CAP)
}

pub fn restrict_with_cap(
    op: &dyn LatticeOperator,
    sites: &SiteSet,
    cap: usize,
) -> Result<BoxRestriction, OperatorError> {
    if sites.dim() != op.dim() {
        return Err(OperatorError::DimensionMismatch {
            expected: op.dim(),
            got: sites.dim(),
        });
    }
    let side = sites.len();
    if side > cap {
        return Err(OperatorError::BoxTooLarge { side, cap });
    }
    let mut matrix = DMatrix::zeros(side, side);
    let mut target = vec![0i64; op.dim()];
    for (i, n) in sites.sites().iter().enumerate() {
        matrix[(i, i)] = op.diagonal(n);
        for k in op.offsets() {
            for ((t, a), b) in target.iter_mut().zip(n).zip(k) {
                *t = a + b;
            }
            if let Some(j) = sites.index_of(&target) {
                matrix[(i, j)] += op.hop(n, k);
            }
        }
    }
    let asym = max_asymmetry(&matrix);
    if asym > SYMMETRY_TOL {
        return Err(OperatorError::Asymmetric(asym));
    }
    Ok(BoxRestriction {
        sites: sites.clone(),
        matrix,
    })
}

/// `Ĥ^{Λ_r(n)}_{λ,α,x}`.
pub fn build_dual(params: &ModelParams, center: Site, radius: usize) -> Result<BoxRestriction, OperatorError> {
    let sites = cube_sites(params.dim(), center, radius)?;
    restrict(&DualOperator::new(params), &sites)
}

/// `H^{Λ_r(n)}_{λ,α,x}`.
pub fn build_primal(params: &ModelParams, center: Site, radius: usize) -> Result<BoxRestriction, OperatorError> {
    let sites = cube_sites(params.dim(), center, radius)?;
    restrict(&PrimalOperator::new(params), &sites)
}

fn cube_sites(dim: usize, center: Site, radius: usize) -> Result<SiteSet, OperatorError> {
    if center.len() != dim {
        return Err(OperatorError::DimensionMismatch {
            expected: dim,
            got: center.len(),
        });
    }
    let cube = Cube::new(center, radius);
    match cube.volume() {
        Some(v) if v <= DEFAULT_DENSE_CAP => Ok(SiteSet::cube(cube)),
        v => Err(OperatorError::BoxTooLarge {
            side: v.unwrap_or(usize::MAX),
            cap: DEFAULT_DENSE_CAP,
        }),
    }
}
