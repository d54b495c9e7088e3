//! κ-separation of the dual diagonal and the first certified eigenpair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::refine::{leakage, refine};
use super::{norm2, EigenCertificate, MultiscaleError};
use crate::lattice::{potential_w, shift_phase, Cube};
use crate::model::ModelParams;
use crate::operator::build_dual;
use crate::spectral::{certify_simple, eig_sym};

/// `κ` is searched over `2^{-1}, …, 2^{-KAPPA_LADDER_DEPTH}`.
pub const KAPPA_LADDER_DEPTH: u32 = 40;

/// Tolerance for comparing a computed eigenpair against an analytic bound,
/// relative to `1 + ‖Ĥ^Λ‖`.
const BOUND_SLACK: f64 = 1e-12;

/// Grid of parameter points with a pass mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodSetEstimate {
    pub points: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    pub measure: f64,
    /// `1/√N`.
    pub sampling_error: f64,
    pub reasons: Vec<Option<String>>,
}

impl GoodSetEstimate {
    pub fn from_mask(points: Vec<Vec<f64>>, mask: Vec<bool>, reasons: Vec<Option<String>>) -> Self {
        let n = mask.len();
        let pass = mask.iter().filter(|&&m| m).count();
        Self {
            points,
            measure: if n == 0 { 0.0 } else { pass as f64 / n as f64 },
            sampling_error: if n == 0 { 1.0 } else { 1.0 / (n as f64).sqrt() },
            mask,
            reasons,
        }
    }
}

/// `min_{n ∈ Λ_R(0)∖{0}} |W(x + α⋆n) − W(x)|`.
pub fn separation(x: &[f64], alpha: &[f64], radius: usize) -> f64 {
    let e = potential_w(x);
    Cube::origin(x.len(), radius)
        .sites()
        .iter()
        .filter(|n| n.iter().any(|&c| c != 0))
        .map(|n| (potential_w(&shift_phase(x, alpha, n)) - e).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Largest ladder value not exceeding the separation at `α`.
pub fn kappa_for(x: &[f64], alpha: &[f64], radius: usize) -> Option<f64> {
    let sep = separation(x, alpha, radius);
    (1..=KAPPA_LADDER_DEPTH)
        .map(|k| 2f64.powi(-(k as i32)))
        .find(|&k| sep >= k)
}

/// Largest ladder `κ` for which the fraction of grid frequencies with
/// separation `≥ κ` reaches `1 − ε`.
pub fn kappa_separation(
    x: &[f64],
    radius: usize,
    epsilon: f64,
    alphas: &[Vec<f64>],
) -> Result<(f64, GoodSetEstimate), MultiscaleError> {
    if alphas.is_empty() {
        return Err(MultiscaleError::InvalidSchedule("empty frequency grid".into()));
    }
    let seps: Vec<f64> = alphas.par_iter().map(|a| separation(x, a, radius)).collect();
    let n = seps.len() as f64;
    for k in 1..=KAPPA_LADDER_DEPTH {
        let kappa = 2f64.powi(-(k as i32));
        let pass = seps.iter().filter(|&&s| s >= kappa).count();
        if pass as f64 / n >= 1.0 - epsilon {
            let mask: Vec<bool> = seps.iter().map(|&s| s >= kappa).collect();
            let reasons = seps
                .iter()
                .map(|&s| (s < kappa).then(|| format!("separation {s:e} < κ = {kappa:e}")))
                .collect();
            return Ok((kappa, GoodSetEstimate::from_mask(alphas.to_vec(), mask, reasons)));
        }
    }
    Err(MultiscaleError::NoSeparation {
        epsilon,
        depth: KAPPA_LADDER_DEPTH,
    })
}

/// Level-1 certificate on `Λ_R(0)`: the unique eigenvalue within `κ/2` of
/// `W(x)`, with `|E_1 − W(x)| ≤ λ‖f‖_∞` and `‖ψ_1 − δ_0‖ ≤ 2λ‖T‖/κ`.
pub fn initial_step(params: &ModelParams, radius: usize, kappa: f64) -> Result<EigenCertificate, MultiscaleError> {
    let lambda = params.coupling;
    let t_norm: f64 = params
        .potential
        .coefficients()
        .iter()
        .filter(|(k, _)| k.iter().any(|&c| c != 0))
        .map(|(_, v)| v.abs())
        .sum();
    if !(kappa > 0.0) {
        return Err(MultiscaleError::BoundViolated(format!("κ = {kappa} is not positive")));
    }
    if lambda > 0.0 && lambda >= kappa / (2.0 * t_norm) {
        return Err(MultiscaleError::BoundViolated(format!(
            "λ = {lambda} is not below κ/(2‖T‖) = {}",
            kappa / (2.0 * t_norm)
        )));
    }
    let dim = params.dim();
    let b = build_dual(params, vec![0; dim], radius)?;
    let spectrum = eig_sym(&b)?;
    let e0 = potential_w(&params.phase);
    let window = spectrum.in_window(e0, kappa / 2.0);
    if window.len() != 1 {
        return Err(MultiscaleError::NotSimple {
            count: window.len(),
            window: (e0 - kappa / 2.0, e0 + kappa / 2.0),
            nearby: spectrum.in_window(e0, kappa).iter().map(|&i| spectrum.values[i]).collect(),
        });
    }
    let norm = spectrum.norm();
    let slack = BOUND_SLACK * (1.0 + norm);
    let center = b.sites.index_of(&vec![0; dim]).expect("origin in box");
    let mut energy = spectrum.values[window[0]];
    let mut psi = spectrum.vector(window[0]);
    if psi[center] < 0.0 {
        psi.iter_mut().for_each(|v| *v = -*v);
    }

    let mut u = vec![0.0; psi.len()];
    u[center] = 1.0;
    let inside: Vec<bool> = (0..psi.len()).map(|i| i == center).collect();
    let mut leak = leakage(&b.matrix, &u, &inside);
    leak[center] = lambda * params.potential.coefficient(&vec![0; dim]);
    let refined = refine(&b.matrix, e0, &u, &leak, center).filter(|r| {
        (e0 + r.delta_e - energy).abs() <= slack
            && norm2(&r.psi.iter().zip(&psi).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 1e-8
    });
    let (energy_diff, vector_diff) = match &refined {
        Some(r) => {
            energy = e0 + r.delta_e;
            psi.clone_from(&r.psi);
            (r.delta_e.abs(), r.vector_diff)
        }
        None => {
            let mut d = psi.clone();
            d[center] -= 1.0;
            ((energy - e0).abs(), norm2(&d))
        }
    };

    let energy_bound = lambda * params.potential.sup_norm();
    if energy_diff > energy_bound + slack {
        return Err(MultiscaleError::BoundViolated(format!(
            "|E_1 − W(x)| = {energy_diff:e} exceeds λ‖f‖ = {energy_bound:e}"
        )));
    }
    let vector_bound = 2.0 * lambda * t_norm / kappa;
    if vector_diff > vector_bound + slack {
        return Err(MultiscaleError::BoundViolated(format!(
            "‖ψ_1 − δ_0‖ = {vector_diff:e} exceeds 2λ‖T‖/κ = {vector_bound:e}"
        )));
    }

    let simplicity_radius = kappa / 2.0 - (energy - e0).abs();
    let cert = certify_simple(&spectrum, energy, simplicity_radius);
    if !cert.simple {
        return Err(MultiscaleError::NotSimple {
            count: cert.count,
            window: (energy - simplicity_radius, energy + simplicity_radius),
            nearby: spectrum.in_window(e0, kappa).iter().map(|&i| spectrum.values[i]).collect(),
        });
    }
    let residual = norm2(&b.shifted_apply(energy, &psi));
    Ok(EigenCertificate {
        level: 1,
        radius,
        dim,
        energy,
        l1_norm: psi.iter().map(|v| v.abs()).sum(),
        psi,
        simplicity_radius,
        residual,
        matrix_norm: norm,
        energy_diff,
        vector_diff,
        refined: refined.is_some(),
        asymptotic_regime: true,
    })
}
