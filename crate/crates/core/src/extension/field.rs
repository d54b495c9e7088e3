//! Real fields on a torus grid with a prescribed subset.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ExtensionError;
use crate::grid::TorusGrid;
use crate::lattice::Cube;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    /// Central-difference `|∇f|` per node.
    pub grad_norm: Vec<f64>,
}

impl GridField {
    pub fn new(grid: TorusGrid, values: Vec<f64>, mask: Vec<bool>) -> Result<Self, ExtensionError> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(ExtensionError::DimensionMismatch(format!(
                "{} values and {} mask entries on a grid of {}",
                values.len(),
                mask.len(),
                grid.len()
            )));
        }
        if let Some(i) = (0..grid.len()).find(|&i| mask[i] && !values[i].is_finite()) {
            return Err(ExtensionError::NonFinite(i));
        }
        let grad_norm = gradient_norms(&grid, &values);
        Ok(Self {
            grid,
            values,
            mask,
            grad_norm,
        })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64, mask: Vec<bool>) -> Result<Self, ExtensionError> {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::new(grid, values, mask)
    }

    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn mask_fraction(&self) -> f64 {
        self.mask_count() as f64 / self.grid.len() as f64
    }

    /// `min |∇f|` over the mask.
    pub fn min_gradient_on_mask(&self) -> Option<f64> {
        self.grad_norm
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(g, _)| *g)
            .reduce(f64::min)
    }
}

/// Central differences on the periodic grid.
pub fn gradient_norms(grid: &TorusGrid, values: &[f64]) -> Vec<f64> {
    let h2 = 2.0 * grid.step();
    (0..grid.len())
        .map(|i| {
            let nb = grid.neighbors(i);
            (0..grid.dim)
                .map(|j| {
                    let d = (values[nb[2 * j + 1]] - values[nb[2 * j]]) / h2;
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Chebyshev distance in grid steps to the nearest masked node, and that
/// node, by a multi-source breadth-first sweep over king moves.
pub fn chebyshev_distance(grid: &TorusGrid, mask: &[bool]) -> Vec<Option<(usize, usize)>> {
    let mut out: Vec<Option<(usize, usize)>> = vec![None; grid.len()];
    let mut queue = VecDeque::new();
    for (i, &m) in mask.iter().enumerate() {
        if m {
            out[i] = Some((0, i));
            queue.push_back(i);
        }
    }
    let moves: Vec<Vec<i64>> = Cube::origin(grid.dim, 1)
        .sites()
        .into_iter()
        .filter(|o| o.iter().any(|&c| c != 0))
        .collect();
    while let Some(i) = queue.pop_front() {
        let (d, src) = out[i].expect("queued nodes are reached");
        let c: Vec<i64> = grid.coords(i).into_iter().map(|v| v as i64).collect();
        for m in &moves {
            let t: Vec<i64> = c.iter().zip(m).map(|(a, b)| a + b).collect();
            let k = grid.index(&t);
            if out[k].is_none() {
                out[k] = Some((d + 1, src));
                queue.push_back(k);
            }
        }
    }
    out
}
