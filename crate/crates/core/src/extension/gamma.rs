//! The κ-set of `γ_{−1} = W` and the level-by-level eigenvalue field.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{chebyshev_distance, GridField};
use super::lipschitz::{lipschitz_extension, ExtensionReport};
use super::mollifier::Mollifier;
use super::ExtensionError;
use crate::grid::TorusGrid;
use crate::lattice::potential_w;
use crate::multiscale::{ScaleSchedule, TrajectoryField};
use crate::operator::build_dual;
use crate::spectral::eig_sym;

/// `κ` is searched over `2π·2^{−k}` for `k = 0..=KAPPA_SET_DEPTH`.
pub const KAPPA_SET_DEPTH: u32 = 40;

/// `|∇W(x)| = 4π (Σ_j sin²(2πx_j))^{1/2}`.
pub fn grad_w_norm(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|&t| (2.0 * std::f64::consts::PI * t).sin().powi(2)).sum();
    4.0 * std::f64::consts::PI * s.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaSet {
    pub kappa: f64,
    pub grid: TorusGrid,
    /// `|∇W| ≥ 2κ`.
    pub mask: Vec<bool>,
    pub fraction: f64,
}

/// Largest ladder `κ` whose set `{|∇W| ≥ 2κ}` covers at least `1 − √ε` of
/// the grid.
pub fn build_kappa_set(grid: TorusGrid, epsilon: f64) -> Result<KappaSet, ExtensionError> {
    if grid.resolution < 16 {
        return Err(ExtensionError::InvalidGrid(format!(
            "resolution {} is below 16",
            grid.resolution
        )));
    }
    let grads: Vec<f64> = (0..grid.len()).map(|i| grad_w_norm(&grid.point(i))).collect();
    let target = 1.0 - epsilon.max(0.0).sqrt();
    let mut last = None;
    for k in 0..=KAPPA_SET_DEPTH {
        let kappa = 2.0 * std::f64::consts::PI * 2f64.powi(-(k as i32));
        let mask: Vec<bool> = grads.iter().map(|&g| g >= 2.0 * kappa).collect();
        let fraction = mask.iter().filter(|&&m| m).count() as f64 / grid.len() as f64;
        let set = KappaSet {
            kappa,
            grid,
            mask,
            fraction,
        };
        if fraction >= target {
            return Ok(set);
        }
        last = Some(set);
    }
    Ok(last.expect("ladder is nonempty"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaLevel {
    pub level: usize,
    /// Nodes of `G^κ_j`: in the κ-set and certified at level `j`.
    pub mask_count: usize,
    /// `max_{G^κ_j} |γ_{j−1} − E_j|`.
    pub epsilon: f64,
    pub delta: f64,
    /// `max_{G^κ_j} |γ_j − E_j|`; zero by construction.
    pub agreement: f64,
    /// `max |γ_j − γ_{j−1}|` over the grid.
    pub step: f64,
    /// `δ_j^{10}` for the asymptotic schedule, otherwise the largest value fed to
    /// the extension.
    pub step_bound: f64,
    pub step_ok: bool,
    /// `min_{G^κ} |∇γ_j|`.
    pub min_gradient: Option<f64>,
    /// `κ − δ_1 − … − δ_j`.
    pub gradient_floor: f64,
    /// `None` when the floor is not positive and the check is skipped.
    pub gradient_ok: Option<bool>,
    pub extension: ExtensionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaField {
    pub kappa: f64,
    /// `γ_J` with mask `G^κ_J`.
    pub field: GridField,
    pub levels: Vec<GammaLevel>,
}

impl GammaField {
    pub fn properties_hold(&self) -> bool {
        self.levels
            .iter()
            .all(|l| l.agreement == 0.0 && l.step_ok && l.gradient_ok != Some(false))
    }
}

fn trivial_extension(
    grid: TorusGrid,
    mask: &[bool],
    delta: f64,
    c: f64,
) -> Result<(GridField, ExtensionReport), ExtensionError> {
    let field = GridField::new(grid, vec![0.0; grid.len()], mask.to_vec())?;
    let c_prime = 6.0 * c * Mollifier::new(grid.dim).grad_l1;
    Ok((
        field,
        ExtensionReport {
            epsilon: 0.0,
            delta,
            c,
            c_prime,
            quadrature_allowance: 0.0,
            bound: 0.0,
            max_grad_off_mask: 0.0,
            within: true,
            continued: 0,
            data_max: 0.0,
        },
    ))
}

/// Allowance on the gradient floor for central differences of `W`
/// (`h²|∂³W|/6 ≤ 8π³h²/3` per axis).
fn gradient_slack(grid: &TorusGrid) -> f64 {
    let h = grid.step();
    8.0 * std::f64::consts::PI.powi(3) * h * h / 3.0 * (grid.dim as f64).sqrt()
}

/// Iterates `γ_j = γ_{j−1} − Φ_j`, where `Φ_j` extends
/// `φ_j = γ_{j−1} − E_j` from `G^κ_j` over the grid. Near `G^κ_j`, `E_j` is
/// continued by re-diagonalizing `Ĥ^{Λ_{R_j}}` at the node and taking the
/// eigenvalue nearest to `E_j` at the closest node of `G^κ_j`.
pub fn build_gamma_field(
    trajectories: &TrajectoryField,
    kset: &KappaSet,
    schedule: &ScaleSchedule,
    c: f64,
) -> Result<GammaField, ExtensionError> {
    let grid = trajectories.grid;
    if kset.grid != grid {
        return Err(ExtensionError::DimensionMismatch("κ-set and trajectories use different grids".into()));
    }
    if schedule.radii() != trajectories.radii.as_slice() {
        return Err(ExtensionError::DimensionMismatch("schedule does not match the trajectories".into()));
    }
    let params = &trajectories.params;
    let mut gamma: Vec<f64> = (0..grid.len()).map(|i| potential_w(&grid.point(i))).collect();
    let mut levels = Vec::new();
    let mut floor = kset.kappa;
    let mut last_mask = kset.mask.clone();
    for j in 1..=schedule.levels {
        let reached = trajectories.level_mask(j);
        let mask: Vec<bool> = kset.mask.iter().zip(&reached).map(|(&a, &b)| a && b).collect();
        if !mask.iter().any(|&m| m) {
            return Err(ExtensionError::MaskEmpty);
        }
        let energy = |i: usize| trajectories.nodes[i].as_ref().expect("reached")
            .energies[j - 1];
        let delta = schedule.delta(j);
        let radius = schedule.radius(j);
        let dist = chebyshev_distance(&grid, &mask);
        let h = grid.step();
        let continued: Vec<Result<f64, ExtensionError>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let (steps, src) = dist[i].expect("mask is nonempty");
                if steps == 0 {
                    return Ok(gamma[i] - energy(i));
                }
                if steps as f64 * h > delta / 3.0 {
                    return Ok(0.0);
                }
                let b = build_dual(&params.with_phase(grid.point(i)), vec![0; grid.dim], radius)?;
                let s = eig_sym(&b)?;
                let k = s.nearest(energy(src)).expect("nonempty box");
                Ok(gamma[i] - s.values[k])
            })
            .collect();
        let values = continued.into_iter().collect::<Result<Vec<f64>, _>>()?;
        let epsilon = (0..grid.len())
            .filter(|&i| mask[i])
            .map(|i| values[i].abs())
            .fold(0.0, f64::max);
        // a vanishing φ extends by zero for every δ, including δ = 0 at λ = 0
        let (phi, extension) = if values.iter().all(|&v| v == 0.0) {
            trivial_extension(grid, &mask, delta, c)?
        } else {
            lipschitz_extension(grid, &mask, &values, epsilon, delta, c)?
        };
        let next: Vec<f64> = (0..grid.len())
            .map(|i| if mask[i] { energy(i) } else { gamma[i] - phi.values[i] })
            .collect();
        let step = next.iter().zip(&gamma).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let agreement = (0..grid.len())
            .filter(|&i| mask[i])
            .map(|i| (next[i] - energy(i)).abs())
            .fold(0.0, f64::max);
        let step_bound = if schedule.is_asymptotic() {
            delta.powi(10)
        } else {
            extension.data_max
        };
        floor -= delta;
        let field = GridField::new(grid, next.clone(), mask.clone())?;
        let min_gradient = field
            .grad_norm
            .iter()
            .zip(&kset.mask)
            .filter(|(_, &m)| m)
            .map(|(g, _)| *g)
            .reduce(f64::min);
        levels.push(GammaLevel {
            level: j,
            mask_count: mask.iter().filter(|&&m| m).count(),
            epsilon,
            delta,
            agreement,
            step,
            step_bound,
            step_ok: step <= step_bound,
            min_gradient,
            gradient_floor: floor,
            gradient_ok: (floor > 0.0)
                .then(|| min_gradient.is_none_or(|g| g >= floor - gradient_slack(&grid))),
            extension,
        });
        gamma = next;
        last_mask = mask;
    }
    Ok(GammaField {
        kappa: kset.kappa,
        field: GridField::new(grid, gamma, last_mask)?,
        levels,
    })
}
