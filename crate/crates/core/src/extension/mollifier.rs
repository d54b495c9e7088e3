//! The bump `η(x) = c·e^{−1/(1−|x|²)}` on the unit ball of `ℝ^d`.

use serde::{Deserialize, Serialize};

use crate::grid::TorusGrid;
use crate::lattice::{Cube, Site};

const RADIAL_STEPS: usize = 200_000;

/// Surface area of the unit sphere in `ℝ^d`.
fn sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^{d−1}| = 2π^{d/2}/Γ(d/2), with |S^{d+1}| = 2π/d · |S^{d−1}|
    let mut area = if d.is_multiple_of(2) { 2.0 * PI } else { 2.0 };
    let mut k = if d.is_multiple_of(2) { 2 } else { 1 };
    while k < d {
        area *= 2.0 * PI / k as f64;
        k += 2;
    }
    area
}

/// `∫_0^1 g(r) dr` by composite Simpson on a fine grid.
fn radial(g: impl Fn(f64) -> f64) -> f64 {
    let n = RADIAL_STEPS;
    let h = 1.0 / n as f64;
    let mut s = g(0.0) + g(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    s * h / 3.0
}

fn profile(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub dim: usize,
    /// Normalizing constant `c`.
    pub scale: f64,
    /// `‖∇η‖_{L¹}`.
    pub grad_l1: f64,
}

impl Mollifier {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension");
        let area = sphere_area(dim);
        let mass = area * radial(|r| profile(r * r) * r.powi(dim as i32 - 1));
        let scale = 1.0 / mass;
        // |∇η| = c e^{−1/(1−r²)} 2r/(1−r²)²
        let grad = area
            * radial(|r| {
                let q = 1.0 - r * r;
                if q <= 0.0 {
                    0.0
                } else {
                    profile(r * r) * 2.0 * r / (q * q) * r.powi(dim as i32 - 1)
                }
            });
        Self {
            dim,
            scale,
            grad_l1: scale * grad,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.scale * profile(x.iter().map(|v| v * v).sum())
    }

    /// `η_t(x) = t^{−d} η(x/t)`.
    pub fn eval_scaled(&self, x: &[f64], t: f64) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v / t).collect();
        self.eval(&y) / t.powi(self.dim as i32)
    }

    /// `∫ η_t` by radial quadrature; independent of `t` up to roundoff.
    pub fn integral(&self, t: f64) -> f64 {
        let area = sphere_area(self.dim);
        let d = self.dim as i32;
        // ∫ t^{−d} η(x/t) dx over |x| < t, with x = t r
        area * radial(|r| self.scale * profile(r * r) * r.powi(d - 1) * t.powi(d)) / t.powi(d)
    }

    /// Grid offsets strictly inside the ball of radius `t` with their raw
    /// weights `h^d η_t` and the normalized weights that sum to one.
    pub fn kernel(&self, grid: &TorusGrid, t: f64) -> DiscreteKernel {
        let h = grid.step();
        let reach = (t / h).ceil() as usize;
        let mut offsets = Vec::new();
        let mut raw = Vec::new();
        for o in Cube::origin(self.dim, reach).sites() {
            let x: Vec<f64> = o.iter().map(|&c| c as f64 * h).collect();
            if x.iter().map(|v| v * v).sum::<f64>() < t * t {
                let w = grid.weight() * self.eval_scaled(&x, t);
                if w > 0.0 {
                    offsets.push(o);
                    raw.push(w);
                }
            }
        }
        let total: f64 = raw.iter().sum();
        DiscreteKernel {
            radius: t,
            weights: raw.iter().map(|w| w / total).collect(),
            raw_sum: total,
            offsets,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteKernel {
    pub radius: f64,
    pub offsets: Vec<Site>,
    pub weights: Vec<f64>,
    /// Grid quadrature of `η_t` before normalization.
    pub raw_sum: f64,
}
