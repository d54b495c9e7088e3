//! Eigenvalue gradients and the Chebyshev swap between phase and frequency
//! good sets.

use serde::{Deserialize, Serialize};

use super::EigenCertificate;
use crate::lattice::shift_phase;
use crate::model::ModelParams;

/// `∇E = Σ_n ψ(n)² ∇_x W(x + α⋆n)` with
/// `∂_j W(x + α⋆n) = −4π sin(2π(x_j + n_j α_j))`.
pub fn eigenvalue_gradient(cert: &EigenCertificate, params: &ModelParams) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut grad = vec![0.0; cert.dim];
    for (n, &v) in cert.sites().sites().iter().zip(&cert.psi) {
        if v == 0.0 {
            continue;
        }
        let y = shift_phase(&params.phase, &params.frequency, n);
        for (g, yj) in grad.iter_mut().zip(&y) {
            *g += v * v * (-2.0 * two_pi * (two_pi * yj).sin());
        }
    }
    grad
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapEstimate {
    pub epsilon: f64,
    /// Passing fraction of the whole table.
    pub joint_fraction: f64,
    /// Passing fraction of each frequency column.
    pub column_fractions: Vec<f64>,
    /// Columns whose passing fraction is at least `1 − √ε`.
    pub good_columns: Vec<bool>,
    pub good_fraction: f64,
    /// Whether the joint fraction reaches `1 − ε`.
    pub precondition: bool,
    /// `precondition ⇒ good_fraction ≥ 1 − √ε`, checked on counts.
    pub chebyshev_holds: bool,
}

/// `table[i][a]` records whether phase sample `i` passes at frequency `a`.
pub fn good_set_swap(table: &[Vec<bool>], epsilon: f64) -> SwapEstimate {
    let rows = table.len();
    let cols = table.first().map_or(0, |r| r.len());
    assert!(table.iter().all(|r| r.len() == cols), "table is not rectangular");
    let root = epsilon.max(0.0).sqrt();
    let column_pass: Vec<usize> = (0..cols)
        .map(|a| table.iter().filter(|r| r[a]).count())
        .collect();
    let total: usize = column_pass.iter().sum();
    let cells = rows * cols;
    let joint_fraction = if cells == 0 { 0.0 } else { total as f64 / cells as f64 };
    let column_fractions: Vec<f64> = column_pass
        .iter()
        .map(|&c| if rows == 0 { 0.0 } else { c as f64 / rows as f64 })
        .collect();
    let good_columns: Vec<bool> = column_fractions.iter().map(|&f| f >= 1.0 - root).collect();
    let good = good_columns.iter().filter(|&&g| g).count();
    let good_fraction = if cols == 0 { 0.0 } else { good as f64 / cols as f64 };
    let precondition = joint_fraction >= 1.0 - epsilon;
    let chebyshev_holds = !precondition || good_fraction >= 1.0 - root;
    SwapEstimate {
        epsilon,
        joint_fraction,
        column_fractions,
        good_columns,
        good_fraction,
        precondition,
        chebyshev_holds,
    }
}
