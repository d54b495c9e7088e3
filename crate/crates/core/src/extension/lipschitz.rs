//! Extension of a small function from a subset of the grid with a
//! controlled gradient, by mollification at the scale
//! `s(x) = min(dist(x, A), δ/6)`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{chebyshev_distance, GridField};
use super::mollifier::{DiscreteKernel, Mollifier};
use super::ExtensionError;
use crate::grid::TorusGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub epsilon: f64,
    pub delta: f64,
    pub c: f64,
    /// `6 C ‖∇η‖_{L¹}`.
    pub c_prime: f64,
    /// Allowance for the grid quadrature and central differences.
    pub quadrature_allowance: f64,
    /// `C′ ε/δ + quadrature_allowance`.
    pub bound: f64,
    pub max_grad_off_mask: f64,
    pub within: bool,
    /// Nodes outside `A` within `δ/3` that carry local extension values.
    pub continued: usize,
    /// `max |f_1|`, which bounds `|F|` everywhere.
    pub data_max: f64,
}

/// `F = f` on `A` (copied), `F(x) = Σ_y η_{s(x)}(x − y) f_1(y) h^d`
/// elsewhere, with `f_1 = values` on `A` and within Chebyshev distance
/// `δ/3` of it, and `f_1 = 0` beyond.
///
/// `values` spans the whole grid; entries farther than `δ/3` from `A` are
/// ignored.
pub fn lipschitz_extension(
    grid: TorusGrid,
    mask: &[bool],
    values: &[f64],
    epsilon: f64,
    delta: f64,
    c: f64,
) -> Result<(GridField, ExtensionReport), ExtensionError> {
    if mask.len() != grid.len() || values.len() != grid.len() {
        return Err(ExtensionError::DimensionMismatch("mask or values length".into()));
    }
    if !mask.iter().any(|&m| m) {
        return Err(ExtensionError::MaskEmpty);
    }
    let h = grid.step();
    if h > delta / 12.0 {
        return Err(ExtensionError::ResolutionTooCoarse { step: h, limit: delta / 12.0 });
    }
    if let Some(i) = (0..grid.len()).find(|&i| mask[i] && values[i].abs() > epsilon) {
        return Err(ExtensionError::PreconditionViolated(format!(
            "|f| = {} exceeds ε = {epsilon} at node {i}",
            values[i].abs()
        )));
    }
    let mollifier = Mollifier::new(grid.dim);
    let dist = chebyshev_distance(&grid, mask);
    let steps = |i: usize| dist[i].expect("mask is nonempty").0;
    let near = |i: usize| steps(i) as f64 * h <= delta / 3.0;
    let f1: Vec<f64> = (0..grid.len()).map(|i| if near(i) { values[i] } else { 0.0 }).collect();
    let continued = (0..grid.len()).filter(|&i| !mask[i] && near(i)).count();
    let data_max = f1.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let cap = delta / 6.0;
    let mut kernels: HashMap<usize, DiscreteKernel> = HashMap::new();
    let cap_steps = (cap / h).floor() as usize;
    for i in 0..grid.len() {
        let k = steps(i).min(cap_steps + 1);
        if k > 0 && !kernels.contains_key(&k) {
            let s = (k as f64 * h).min(cap);
            kernels.insert(k, mollifier.kernel(&grid, s));
        }
    }
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if mask[i] {
                return values[i];
            }
            let kern = &kernels[&steps(i).min(cap_steps + 1)];
            let c: Vec<i64> = grid.coords(i).into_iter().map(|v| v as i64).collect();
            kern.offsets
                .iter()
                .zip(&kern.weights)
                .map(|(o, w)| {
                    let t: Vec<i64> = c.iter().zip(o).map(|(a, b)| a + b).collect();
                    w * f1[grid.index(&t)]
                })
                .sum()
        })
        .collect();
    let field = GridField::new(grid, out, mask.to_vec())?;
    let max_grad_off_mask = field
        .grad_norm
        .iter()
        .zip(mask)
        .filter(|(_, &m)| !m)
        .map(|(g, _)| *g)
        .fold(0.0, f64::max);
    let c_prime = 6.0 * c * mollifier.grad_l1;
    let quadrature_allowance = 0.0;
    let bound = c_prime * epsilon / delta + quadrature_allowance;
    Ok((
        field,
        ExtensionReport {
            epsilon,
            delta,
            c,
            c_prime,
            quadrature_allowance,
            bound,
            max_grad_off_mask,
            within: max_grad_off_mask <= bound,
            continued,
            data_max,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_arcs(n: usize) -> (TorusGrid, Vec<bool>) {
        let g = TorusGrid::new(1, n);
        let mask = (0..n)
            .map(|i| {
                let x = g.point(i)[0];
                x <= 0.3 || x >= 0.7
            })
            .collect();
        (g, mask)
    }

    #[test]
    fn zero_stays_zero() {
        let (g, mask) = two_arcs(256);
        let (f, r) = lipschitz_extension(g, &mask, &vec![0.0; 256], 0.01, 0.1, 1.0).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
        assert_eq!(r.max_grad_off_mask, 0.0);
    }

    #[test]
    fn full_mask_is_identity() {
        let g = TorusGrid::new(1, 128);
        let v: Vec<f64> = (0..128).map(|i| 0.01 * (i as f64).sin()).collect();
        let (f, _) = lipschitz_extension(g, &[true; 128], &v, 0.01, 0.1, 1.0).unwrap();
        assert_eq!(f.values, v);
    }

    #[test]
    fn sine_on_two_arcs() {
        let (g, mask) = two_arcs(256);
        let v: Vec<f64> = (0..256)
            .map(|i| 0.01 * (2.0 * std::f64::consts::PI * g.point(i)[0]).sin())
            .collect();
        let (f, r) = lipschitz_extension(g, &mask, &v, 0.01, 0.1, 1.0).unwrap();
        for i in 0..256 {
            if mask[i] {
                assert_eq!(f.values[i].to_bits(), v[i].to_bits());
            }
        }
        assert!(r.within, "{r:?}");
    }

    #[test]
    fn coarse_grid_rejected() {
        let (g, mask) = two_arcs(64);
        assert!(matches!(
            lipschitz_extension(g, &mask, &vec![0.0; 64], 0.01, 0.1, 1.0),
            Err(ExtensionError::ResolutionTooCoarse { .. })
        ));
        assert!(matches!(
            lipschitz_extension(TorusGrid::new(1, 256), &vec![false; 256], &vec![0.0; 256], 0.01, 0.1, 1.0),
            Err(ExtensionError::MaskEmpty)
        ));
    }
}
