//! Estimates on solutions of `H^Ξ ψ = Eψ` in terms of Green's functions of
//! sub-boxes.

use serde::{Deserialize, Serialize};

use super::{eig_sym, greens, resolvent_norm, SpectralError};
use crate::lattice::{sup_norm, Site, SiteSet};
use crate::operator::{restrict, LatticeOperator};

/// Residual tolerance for accepting `ψ` as a solution, relative to `1 + ‖H‖`.
pub const SOLUTION_TOL: f64 = 1e-10;

fn row_sum_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Right-hand side of the Poisson identity
/// `ψ(n) = −Σ_{m∈Λ} G^Λ(E;n,m) Σ_{ℓ∈Ξ∖Λ} H(m,ℓ) ψ(ℓ)` for each `n ∈ Λ`.
///
/// `psi` is indexed by `outer`; the result by `inner`.
pub fn poisson_expand(
    op: &dyn LatticeOperator,
    outer: &SiteSet,
    psi: &[f64],
    energy: f64,
    inner: &SiteSet,
) -> Result<Vec<f64>, SpectralError> {
    if psi.len() != outer.len() {
        return Err(SpectralError::PreconditionViolated(format!(
            "vector has {} entries for {} sites",
            psi.len(),
            outer.len()
        )));
    }
    if !inner.is_subset_of(outer) {
        return Err(SpectralError::PreconditionViolated(
            "inner set is not contained in the outer set".into(),
        ));
    }
    let big = restrict(op, outer)?;
    let residual = norm2(&big.shifted_apply(energy, psi));
    let tol = SOLUTION_TOL * (1.0 + row_sum_norm(&big.matrix));
    if residual > tol {
        return Err(SpectralError::PreconditionViolated(format!(
            "ψ is not a solution: residual {residual:e} > {tol:e}"
        )));
    }

    let g = greens(&restrict(op, inner)?, energy)?;
    let mut target: Site = vec![0; op.dim()];
    let leak: Vec<f64> = inner
        .sites()
        .iter()
        .map(|m| {
            let mut s = 0.0;
            for k in op.offsets() {
                for ((t, a), b) in target.iter_mut().zip(m).zip(k) {
                    *t = a + b;
                }
                if inner.contains(&target) {
                    continue;
                }
                if let Some(l) = outer.index_of(&target) {
                    s += op.hop(m, k) * psi[l];
                }
            }
            s
        })
        .collect();
    let n = inner.len();
    Ok((0..n)
        .map(|i| -(0..n).map(|j| g[(i, j)] * leak[j]).sum::<f64>())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationOutcome {
    /// `χ_{Λ_{3R/2}(0)} ψ` in the enumeration of `Ξ`.
    pub phi: Vec<f64>,
    pub residual: f64,
    /// `(10R)^{2d} δ`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Cuts `ψ` to `Λ_{3R/2}(0)` and measures `‖(H^Ξ − E)φ‖`.
///
/// Requires `|ψ(n)| ≤ δ` on `Λ_{2R}(0) ∖ Λ_R(0)` and `δ ≥ e^{−ηR/10}`.
#[allow(clippy::too_many_arguments)]
pub fn truncate_test_function(
    op: &dyn LatticeOperator,
    outer: &SiteSet,
    psi: &[f64],
    energy: f64,
    radius: usize,
    delta: f64,
    eta: f64,
) -> Result<TruncationOutcome, SpectralError> {
    let r = radius as i64;
    let floor = (-eta * radius as f64 / 10.0).exp();
    if delta < floor {
        return Err(SpectralError::PreconditionViolated(format!(
            "δ = {delta:e} is below e^(-ηR/10) = {floor:e}"
        )));
    }
    for (i, n) in outer.sites().iter().enumerate() {
        let a = sup_norm(n);
        if a > r && a <= 2 * r && psi[i].abs() > delta {
            return Err(SpectralError::PreconditionViolated(format!(
                "|ψ({n:?})| = {:e} exceeds δ = {delta:e}",
                psi[i].abs()
            )));
        }
    }
    let phi: Vec<f64> = outer
        .sites()
        .iter()
        .zip(psi)
        .map(|(n, &v)| if 2 * sup_norm(n) <= 3 * r { v } else { 0.0 })
        .collect();
    let big = restrict(op, outer)?;
    let residual = norm2(&big.shifted_apply(energy, &phi));
    let bound = (10.0 * radius as f64).powi(2 * op.dim() as i32) * delta;
    Ok(TruncationOutcome {
        phi,
        residual,
        bound,
        within_bound: residual <= bound,
    })
}

/// `‖(H^{Λ_R(0)∖Λ_{r/2}(0)} − E)^{-1}‖`.
pub fn annulus_resolvent_norm(
    op: &dyn LatticeOperator,
    inner: usize,
    outer: usize,
    energy: f64,
) -> Result<f64, SpectralError> {
    let sites = SiteSet::annulus(op.dim(), inner, outer);
    if sites.is_empty() {
        return Err(SpectralError::PreconditionViolated(format!(
            "annulus Λ_{outer} ∖ Λ_{inner}/2 is empty"
        )));
    }
    let spectrum = eig_sym(&restrict(op, &sites)?)?;
    resolvent_norm(&spectrum, energy)
}

/// `e^{5ρ^τ}`.
pub fn annulus_bound(rho: usize, tau: f64) -> f64 {
    (5.0 * (rho as f64).powf(tau)).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    /// Largest `|ψ(n)| / bound(n)` over `n ∈ Λ_{R/4}(0)`.
    pub worst_ratio: f64,
    pub worst_site: Option<Site>,
    pub holds: bool,
}

/// Checks `|ψ(n)| ≤ λ e^{−(γ/2) dist(n, ∂Λ_R(0))} · max_m e^{−(η/2) dist(m, Λ_R(0))} |ψ(m)|`
/// for every `n ∈ Λ_{R/4}(0)` of `sites`.
pub fn decay_iteration_check(
    sites: &SiteSet,
    psi: &[f64],
    radius: usize,
    gamma: f64,
    eta: f64,
    coupling: f64,
) -> DecayCheck {
    let r = radius as i64;
    let envelope = sites
        .sites()
        .iter()
        .zip(psi)
        .map(|(m, v)| {
            let dist = (sup_norm(m) - r).max(0) as f64;
            (-0.5 * eta * dist).exp() * v.abs()
        })
        .fold(0.0, f64::max);
    let mut worst_ratio = 0.0f64;
    let mut worst_site = None;
    let mut holds = true;
    for (n, v) in sites.sites().iter().zip(psi) {
        if 4 * sup_norm(n) > r {
            continue;
        }
        let dist = (r - sup_norm(n)) as f64;
        let bound = coupling * (-0.5 * gamma * dist).exp() * envelope;
        if v.abs() > bound {
            holds = false;
        }
        let ratio = if bound > 0.0 {
            v.abs() / bound
        } else if v.abs() > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if worst_site.is_none() || ratio > worst_ratio {
            worst_ratio = ratio;
            worst_site = Some(n.clone());
        }
    }
    DecayCheck {
        worst_ratio,
        worst_site,
        holds,
    }
}
