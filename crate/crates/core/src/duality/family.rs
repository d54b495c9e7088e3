//! Translated eigenfunction families `ψ_ℓ(x; n) = ψ(x − α⋆ℓ; n + ℓ)`.

use serde::{Deserialize, Serialize};

use super::DualityError;
use crate::lattice::{shift_phase, torus_delta, Cube, Site, SiteSet};
use crate::model::ModelParams;
use crate::multiscale::TrajectoryField;
use crate::operator::build_dual;
use crate::spectral::{certify_simple, eig_sym};

/// Roundoff allowance on residual contracts, relative to `1 + ‖Ĥ^B‖`.
const RESIDUAL_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub label: Site,
    /// Grid node the sample was read from.
    pub node: usize,
    /// Node minus the exact phase `x − α⋆ℓ`, per axis.
    pub offset: Vec<f64>,
    pub energy: f64,
    pub sample_residual: f64,
    pub simplicity_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionFamily {
    pub base: Vec<f64>,
    pub coupling: f64,
    pub window: usize,
    /// Radius `R` of the sampled eigenvectors.
    pub radius: usize,
    pub dim: usize,
    pub members: Vec<FamilyMember>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenfunctionFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `Λ_{R+L}(0)`, which holds every member; vectors are indexed by it.
    pub fn sites(&self) -> SiteSet {
        SiteSet::centered_cube(self.dim, self.radius + self.window)
    }

    /// Support box `Λ_R(−ℓ)` of member `i`.
    pub fn support(&self, i: usize) -> Cube {
        Cube::new(self.members[i].label.iter().map(|&l| -l).collect(), self.radius)
    }
}

/// Members for `|ℓ|_∞ ≤ L` whose phase `x − α⋆ℓ` rounds to a good node.
pub fn build_family(field: &TrajectoryField, x: &[f64], window: usize) -> Result<EigenfunctionFamily, DualityError> {
    let dim = field.grid.dim;
    if x.len() != dim {
        return Err(DualityError::DimensionMismatch(format!("{}-dimensional base phase", x.len())));
    }
    let alpha = &field.params.frequency;
    let radius = field.radius();
    let sites = SiteSet::centered_cube(dim, radius + window);
    let local = SiteSet::centered_cube(dim, radius);
    let mut members = Vec::new();
    let mut vectors = Vec::new();
    for label in Cube::origin(dim, window).sites() {
        let minus: Vec<i64> = label.iter().map(|&l| -l).collect();
        let y = shift_phase(x, alpha, &minus);
        let node = field.grid.nearest(&y);
        let Some(sample) = field.good(node) else { continue };
        let point = field.grid.point(node);
        let mut v = vec![0.0; sites.len()];
        for (s, &val) in local.sites().iter().zip(&sample.psi) {
            let n: Vec<i64> = s.iter().zip(&label).map(|(a, b)| a - b).collect();
            v[sites.index_of(&n).expect("member inside working box")] = val;
        }
        members.push(FamilyMember {
            offset: point.iter().zip(&y).map(|(&a, &b)| torus_delta(a, b)).collect(),
            label,
            node,
            energy: *sample.energies.last().expect("complete run"),
            sample_residual: sample.residual,
            simplicity_radius: *sample.simplicity.last().expect("complete run"),
        });
        vectors.push(v);
    }
    if members.is_empty() {
        return Err(DualityError::EmptyFamily);
    }
    Ok(EigenfunctionFamily {
        base: x.to_vec(),
        coupling: field.params.coupling,
        window,
        radius,
        dim,
        members,
        vectors,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    /// `max_{ℓ≠k} |⟨ψ_ℓ, ψ_k⟩|`.
    pub max_offdiag: f64,
    /// `max_ℓ |‖ψ_ℓ‖ − 1|`.
    pub max_norm_dev: f64,
    pub members: usize,
}

impl GramReport {
    pub fn deviation(&self) -> f64 {
        self.max_offdiag.max(self.max_norm_dev)
    }
}

/// `12 λ^{1/10}`.
pub fn gram_envelope(coupling: f64) -> f64 {
    12.0 * coupling.powf(0.1)
}

pub fn gram_check(family: &EigenfunctionFamily) -> GramReport {
    let v = &family.vectors;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut max_offdiag: f64 = 0.0;
    let mut max_norm_dev: f64 = 0.0;
    for i in 0..v.len() {
        max_norm_dev = max_norm_dev.max((dot(&v[i], &v[i]).sqrt() - 1.0).abs());
        for j in 0..i {
            max_offdiag = max_offdiag.max(dot(&v[i], &v[j]).abs());
        }
    }
    GramReport {
        max_offdiag,
        max_norm_dev,
        members: v.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberResidual {
    pub label: Site,
    /// `‖(Ĥ^B − γ_ℓ)ψ_ℓ‖`.
    pub residual: f64,
    /// Part of the residual outside the member's support box.
    pub leakage: f64,
    /// `r_sample + 4π‖offset‖₁ + leakage`, plus roundoff.
    pub tolerance: f64,
    pub within: bool,
}

/// Residuals of every member against `Ĥ_x` restricted to `Λ_radius(0)`.
pub fn eigen_residuals(
    family: &EigenfunctionFamily,
    params: &ModelParams,
    radius: usize,
) -> Result<Vec<MemberResidual>, DualityError> {
    let dim = family.dim;
    let sites = family.sites();
    for i in 0..family.len() {
        let s = family.support(i);
        let far = s.center.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0) + s.radius;
        if far > radius {
            return Err(DualityError::BoxTooSmall {
                label: family.members[i].label.clone(),
                radius,
                needed: far,
            });
        }
    }
    let b = build_dual(&params.with_phase(family.base.clone()), vec![0; dim], radius)?;
    let norm = b.matrix.abs().row_sum().max();
    Ok(family
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let v = sites.transfer(&family.vectors[i], &b.sites);
            let r = b.shifted_apply(m.energy, &v);
            let support = family.support(i);
            let leakage = b
                .sites
                .sites()
                .iter()
                .zip(&r)
                .filter(|(s, _)| !support.contains(s))
                .map(|(_, x)| x * x)
                .sum::<f64>()
                .sqrt();
            let residual = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            let drift = 4.0 * std::f64::consts::PI * m.offset.iter().map(|o| o.abs()).sum::<f64>();
            let tolerance = m.sample_residual + drift + leakage + RESIDUAL_SLACK * (1.0 + norm);
            MemberResidual {
                label: m.label.clone(),
                residual,
                leakage,
                tolerance,
                within: residual <= tolerance,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub a: Site,
    pub b: Site,
    pub gap: f64,
    pub radius: f64,
    /// Whether `γ_a` is still `radius`-simple for `Ĥ_x` on the working box.
    pub enclosing_simple: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinctnessReport {
    pub collisions: Vec<Collision>,
    /// No collision coexists with a simple eigenvalue on the enclosing box.
    pub consistent: bool,
}

/// Member pairs whose energies lie within the smaller of their simplicity
/// radii. Two nearly orthogonal approximate eigenvectors at such energies
/// force a second eigenvalue into the window, so the enclosing box must
/// fail to certify simplicity.
pub fn distinctness_check(family: &EigenfunctionFamily, params: &ModelParams) -> Result<DistinctnessReport, DualityError> {
    let m = &family.members;
    let mut pairs = Vec::new();
    for i in 0..m.len() {
        for j in 0..i {
            let radius = m[i].simplicity_radius.min(m[j].simplicity_radius);
            let gap = (m[i].energy - m[j].energy).abs();
            if gap < radius {
                pairs.push((j, i, gap, radius));
            }
        }
    }
    if pairs.is_empty() {
        return Ok(DistinctnessReport {
            collisions: Vec::new(),
            consistent: true,
        });
    }
    let b = build_dual(&params.with_phase(family.base.clone()), vec![0; family.dim], family.radius + family.window)?;
    let spectrum = eig_sym(&b)?;
    let collisions: Vec<Collision> = pairs
        .into_iter()
        .map(|(i, j, gap, radius)| Collision {
            a: m[i].label.clone(),
            b: m[j].label.clone(),
            gap,
            radius,
            enclosing_simple: certify_simple(&spectrum, m[i].energy, radius).simple,
        })
        .collect();
    Ok(DistinctnessReport {
        consistent: collisions.iter().all(|c| !c.enclosing_simple),
        collisions,
    })
}
