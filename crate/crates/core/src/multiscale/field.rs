//! Multi-scale runs at every node of a phase grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_multiscale, MultiscaleConfig};
use crate::grid::TorusGrid;
use crate::model::ModelParams;

/// What a node's run produced, level by level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSample {
    pub kappa: f64,
    /// `E_j` for every level reached.
    pub energies: Vec<f64>,
    pub simplicity: Vec<f64>,
    /// Eigenvector of the last level reached, on `Λ_{R_j}(0)`.
    pub psi: Vec<f64>,
    pub residual: f64,
    /// Reached the last level of the schedule.
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryField {
    pub grid: TorusGrid,
    /// Model with the phase of the first node; the phase is overwritten
    /// per node.
    pub params: ModelParams,
    pub radii: Vec<usize>,
    pub nodes: Vec<Option<NodeSample>>,
    pub reasons: Vec<Option<String>>,
}

impl TrajectoryField {
    pub fn compute(params: &ModelParams, config: &MultiscaleConfig, grid: TorusGrid) -> Self {
        assert_eq!(grid.dim, params.dim(), "grid dimension");
        let levels = config.schedule.levels;
        let runs: Vec<(Option<NodeSample>, Option<String>)> = (0..grid.len())
            .into_par_iter()
            .map(|i| match run_multiscale(&params.with_phase(grid.point(i)), config) {
                Ok(t) => {
                    let last = t.last();
                    let sample = NodeSample {
                        kappa: t.kappa,
                        energies: t.certificates.iter().map(|c| c.energy).collect(),
                        simplicity: t.certificates.iter().map(|c| c.simplicity_radius).collect(),
                        psi: last.psi.clone(),
                        residual: last.residual,
                        complete: t.certificates.len() == levels,
                    };
                    (Some(sample), t.truncated)
                }
                Err(e) => (None, Some(e.to_string())),
            })
            .collect();
        let (nodes, reasons) = runs.into_iter().unzip();
        Self {
            grid,
            params: params.with_phase(grid.point(0)),
            radii: config.schedule.radii().to_vec(),
            nodes,
            reasons,
        }
    }

    /// `R_J`.
    pub fn radius(&self) -> usize {
        *self.radii.last().expect("nonempty schedule")
    }

    pub fn levels(&self) -> usize {
        self.radii.len()
    }

    /// Node whose run reached the last level.
    pub fn good(&self, i: usize) -> Option<&NodeSample> {
        self.nodes[i].as_ref().filter(|s| s.complete)
    }

    pub fn mask(&self) -> Vec<bool> {
        (0..self.grid.len()).map(|i| self.good(i).is_some()).collect()
    }

    /// Nodes whose run reached level `j` (1-based).
    pub fn level_mask(&self, j: usize) -> Vec<bool> {
        self.nodes
            .iter()
            .map(|n| n.as_ref().is_some_and(|s| s.energies.len() >= j))
            .collect()
    }

    pub fn good_fraction(&self) -> f64 {
        self.mask().iter().filter(|&&m| m).count() as f64 / self.grid.len() as f64
    }

    /// Corners and weights of the cell containing `y` if every corner with
    /// positive weight is good. At a node this is the node itself.
    pub fn cell(&self, y: &[f64]) -> Option<Vec<(usize, f64)>> {
        let cell: Vec<(usize, f64)> = self.grid.cell(y).into_iter().filter(|&(_, w)| w > 0.0).collect();
        cell.iter().all(|&(i, _)| self.good(i).is_some()).then_some(cell)
    }

    /// Multilinear interpolation of `(γ, ψ)` at `y`, or `None` off the good
    /// cells.
    pub fn interpolate(&self, y: &[f64]) -> Option<(f64, Vec<f64>)> {
        let cell = self.cell(y)?;
        let len = self.nodes[cell[0].0].as_ref()?.psi.len();
        let mut energy = 0.0;
        let mut psi = vec![0.0; len];
        for (i, w) in cell {
            let s = self.good(i)?;
            energy += w * s.energies.last().copied()?;
            psi.iter_mut().zip(&s.psi).for_each(|(p, v)| *p += w * v);
        }
        Some((energy, psi))
    }
}
