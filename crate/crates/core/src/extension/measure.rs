//! Level-set counts and the pushforward histogram of the eigenvalue field.

use serde::{Deserialize, Serialize};

use super::field::GridField;

/// Default histogram layout: 256 bins over `[−2d−1, 2d+1]`.
pub const DEFAULT_BINS: usize = 256;

/// `C_d = 4d`.
pub fn level_set_constant(dim: usize) -> f64 {
    4.0 * dim as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetEstimate {
    pub energy: f64,
    pub half_width: f64,
    /// Fraction of grid nodes in the mask with `γ ∈ [E−s, E+s]`.
    pub fraction: f64,
    pub gradient_floor: Option<f64>,
    /// `C_d h`.
    pub slack: f64,
    /// `C_d s/δ_grad + slack`; absent without a positive gradient floor.
    pub bound: Option<f64>,
    pub within: bool,
}

/// Grid count of `{x ∈ G : γ(x) ∈ [E−s, E+s]}` against `C_d s/δ_grad`,
/// with `δ_grad` the smallest central-difference gradient on the mask.
pub fn level_set_measure(field: &GridField, energy: f64, half_width: f64) -> LevelSetEstimate {
    assert!(half_width > 0.0, "half-width must be positive");
    let n = field.grid.len() as f64;
    let hits = field
        .values
        .iter()
        .zip(&field.mask)
        .filter(|(&v, &m)| m && (v - energy).abs() <= half_width)
        .count();
    let cd = level_set_constant(field.grid.dim);
    let gradient_floor = field.min_gradient_on_mask();
    let slack = cd * field.grid.step();
    let bound = gradient_floor.filter(|&g| g > 0.0).map(|g| cd * half_width / g + slack);
    let fraction = hits as f64 / n;
    LevelSetEstimate {
        energy,
        half_width,
        fraction,
        gradient_floor,
        slack,
        bound,
        within: bound.is_none_or(|b| fraction <= b),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Count over all grid nodes.
    pub fraction: f64,
    pub density: f64,
    /// Density allowed by the level-set estimate.
    pub bound: Option<f64>,
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub bins: Vec<HistogramBin>,
    /// Fraction of `[−2d, 2d]` covered by bins with positive, bounded
    /// density.
    pub covered: f64,
    pub gradient_floor: Option<f64>,
}

/// `bins` equal bins over `[lo, hi]`.
pub fn energy_grid(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

/// Default edges for a `d`-dimensional field.
pub fn default_energy_grid(dim: usize) -> Vec<f64> {
    let r = 2.0 * dim as f64 + 1.0;
    energy_grid(-r, r, DEFAULT_BINS)
}

/// Histogram of `γ` over the mask on the given bin edges.
pub fn ac_coverage_report(field: &GridField, edges: &[f64]) -> CoverageReport {
    assert!(edges.len() >= 2, "need at least one bin");
    let n = field.grid.len() as f64;
    let cd = level_set_constant(field.grid.dim);
    let gradient_floor = field.min_gradient_on_mask();
    let slack = cd * field.grid.step();
    let mut counts = vec![0usize; edges.len() - 1];
    for (&v, &m) in field.values.iter().zip(&field.mask) {
        if !m || v < edges[0] || v > edges[edges.len() - 1] {
            continue;
        }
        let b = edges.partition_point(|&e| e <= v).clamp(1, edges.len() - 1) - 1;
        counts[b] += 1;
    }
    let span = 2.0 * field.grid.dim as f64;
    let mut covered = 0.0;
    let bins: Vec<HistogramBin> = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let (lo, hi) = (edges[i], edges[i + 1]);
            let width = hi - lo;
            let fraction = count as f64 / n;
            let density = fraction / width;
            let bound = gradient_floor.filter(|&g| g > 0.0).map(|g| cd / (2.0 * g) + slack / width);
            let bounded = bound.is_none_or(|b| density <= b);
            if count > 0 && bounded {
                covered += (hi.min(span) - lo.max(-span)).max(0.0);
            }
            HistogramBin {
                lo,
                hi,
                count,
                fraction,
                density,
                bound,
                bounded,
            }
        })
        .collect();
    CoverageReport {
        bins,
        covered: covered / (2.0 * span),
        gradient_floor,
    }
}

/// Mass of the arcsine law of `2cos(2πx)` on `[a, b] ⊂ [−2, 2]`.
pub fn arcsine_mass(a: f64, b: f64) -> f64 {
    let f = |e: f64| (e.clamp(-2.0, 2.0) / 2.0).asin();
    (f(b) - f(a)) / std::f64::consts::PI
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcsineBin {
    pub lo: f64,
    pub hi: f64,
    /// Fraction of all grid nodes with `γ` in the bin.
    pub fraction: f64,
    pub expected: f64,
    /// `|fraction − expected| / expected`; absent when `expected = 0`.
    pub relative_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcsineComparison {
    pub bins: Vec<ArcsineBin>,
    pub max_relative_error: f64,
}

/// Pushforward of the uniform grid measure under `γ`, over every node,
/// against the arcsine law of `2cos(2πx)`.
pub fn arcsine_comparison(field: &GridField, edges: &[f64]) -> ArcsineComparison {
    assert!(edges.len() >= 2, "need at least one bin");
    let n = field.grid.len() as f64;
    let mut counts = vec![0usize; edges.len() - 1];
    for &v in &field.values {
        if v < edges[0] || v > edges[edges.len() - 1] {
            continue;
        }
        let b = edges.partition_point(|&e| e <= v).clamp(1, edges.len() - 1) - 1;
        counts[b] += 1;
    }
    let bins: Vec<ArcsineBin> = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let (lo, hi) = (edges[i], edges[i + 1]);
            let fraction = count as f64 / n;
            let expected = arcsine_mass(lo, hi);
            ArcsineBin {
                lo,
                hi,
                fraction,
                expected,
                relative_error: (expected > 0.0).then(|| (fraction - expected).abs() / expected),
            }
        })
        .collect();
    let max_relative_error = bins.iter().filter_map(|b| b.relative_error).fold(0.0, f64::max);
    ArcsineComparison {
        bins,
        max_relative_error,
    }
}
