//! Uniform grids on the torus `𝕋^d`.

use serde::{Deserialize, Serialize};

use crate::lattice::wrap_unit;

/// `N^d` nodes `i/N`, enumerated lexicographically with the last axis
/// fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub dim: usize,
    pub resolution: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, resolution: usize) -> Self {
        assert!(dim >= 1 && resolution >= 1, "empty grid");
        Self { dim, resolution }
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// Cell volume `h^d`.
    pub fn weight(&self) -> f64 {
        self.step().powi(self.dim as i32)
    }

    pub fn coords(&self, mut i: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        for j in (0..self.dim).rev() {
            c[j] = i % self.resolution;
            i /= self.resolution;
        }
        c
    }

    /// Index of the node with integer coordinates `c`, reduced mod `N`.
    pub fn index(&self, c: &[i64]) -> usize {
        let n = self.resolution as i64;
        c.iter().fold(0usize, |acc, &cj| acc * self.resolution + cj.rem_euclid(n) as usize)
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coords(i)
            .into_iter()
            .map(|c| c as f64 / self.resolution as f64)
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Node closest to `y` (ties round up).
    pub fn nearest(&self, y: &[f64]) -> usize {
        let n = self.resolution as f64;
        let c: Vec<i64> = y.iter().map(|&t| (wrap_unit(t) * n).round() as i64).collect();
        self.index(&c)
    }

    /// Corners of the cell containing `y` with their multilinear weights.
    pub fn cell(&self, y: &[f64]) -> Vec<(usize, f64)> {
        let n = self.resolution as f64;
        let mut base = Vec::with_capacity(self.dim);
        let mut frac = Vec::with_capacity(self.dim);
        for &t in y {
            let s = wrap_unit(t) * n;
            let b = s.floor();
            base.push(b as i64);
            frac.push(s - b);
        }
        let mut out = Vec::with_capacity(1 << self.dim);
        for mask in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut c = base.clone();
            for j in 0..self.dim {
                if mask >> j & 1 == 1 {
                    c[j] += 1;
                    w *= frac[j];
                } else {
                    w *= 1.0 - frac[j];
                }
            }
            out.push((self.index(&c), w));
        }
        out
    }

    /// Neighbours `i ± e_j` in axis order `(−e_1, +e_1, −e_2, …)`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let c: Vec<i64> = self.coords(i).into_iter().map(|v| v as i64).collect();
        let mut out = Vec::with_capacity(2 * self.dim);
        for j in 0..self.dim {
            for s in [-1, 1] {
                let mut m = c.clone();
                m[j] += s;
                out.push(self.index(&m));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trips() {
        let g = TorusGrid::new(2, 5);
        assert_eq!(g.len(), 25);
        for i in 0..g.len() {
            let c: Vec<i64> = g.coords(i).into_iter().map(|v| v as i64).collect();
            assert_eq!(g.index(&c), i);
        }
        assert_eq!(g.index(&[-1, 5]), g.index(&[4, 0]));
        assert_eq!(g.point(7), vec![0.2, 0.4]);
    }

    #[test]
    fn cell_weights_sum_to_one() {
        let g = TorusGrid::new(2, 8);
        let cell = g.cell(&[0.99, 0.3]);
        assert_eq!(cell.len(), 4);
        assert!((cell.iter().map(|c| c.1).sum::<f64>() - 1.0).abs() < 1e-15);
        // wraps to the first column
        assert!(cell.iter().any(|&(i, _)| g.coords(i)[0] == 0));
        assert_eq!(g.nearest(&[0.99, 0.3]), g.index(&[0, 2]));
    }
}
