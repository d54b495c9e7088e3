//! Lattice sites, cubes and torus arithmetic.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// A point of ℤ^d.
pub type Site = Vec<i64>;

/// `|n|_∞`.
pub fn sup_norm(n: &[i64]) -> i64 {
    n.iter().map(|c| c.abs()).max().unwrap_or(0)
}

/// `|n - m|_∞`.
pub fn sup_dist(n: &[i64], m: &[i64]) -> i64 {
    n.iter().zip(m).map(|(a, b)| (a - b).abs()).max().unwrap_or(0)
}

/// Reduce a real number to `[0, 1)`.
pub fn wrap_unit(t: f64) -> f64 {
    let r = t - t.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `x + α⋆n` on the torus, reduced after every addition.
pub fn shift_phase(x: &[f64], alpha: &[f64], n: &[i64]) -> Vec<f64> {
    x.iter()
        .zip(alpha)
        .zip(n)
        .map(|((&xj, &aj), &nj)| wrap_unit(xj + wrap_unit(nj as f64 * aj)))
        .collect()
}

/// Signed distance between two torus coordinates, in `[-1/2, 1/2)`.
pub fn torus_delta(a: f64, b: f64) -> f64 {
    let d = wrap_unit(a - b);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// `W(x) = Σ_j 2cos(2π x_j)`.
pub fn potential_w(x: &[f64]) -> f64 {
    x.iter()
        .map(|&xj| 2.0 * (2.0 * std::f64::consts::PI * xj).cos())
        .sum()
}

/// The cube `Λ_r(n) = {m : |m - n|_∞ ≤ r}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Site,
    pub radius: usize,
}

impl Cube {
    pub fn new(center: Site, radius: usize) -> Self {
        Self { center, radius }
    }

    pub fn origin(dim: usize, radius: usize) -> Self {
        Self::new(vec![0; dim], radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Number of sites, `(2r+1)^d`, or `None` on overflow.
    pub fn volume(&self) -> Option<usize> {
        let mut v: usize = 1;
        for _ in 0..self.dim() {
            v = v.checked_mul(self.side())?;
        }
        Some(v)
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        sup_dist(n, &self.center) <= self.radius as i64
    }

    /// Sites in lexicographic order, last coordinate fastest.
    pub fn sites(&self) -> Vec<Site> {
        let d = self.dim();
        let r = self.radius as i64;
        let side = self.side();
        let total = self.volume().expect("cube volume overflows usize");
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut site = vec![0i64; d];
            for j in (0..d).rev() {
                site[j] = self.center[j] - r + (idx % side) as i64;
                idx /= side;
            }
            out.push(site);
        }
        out
    }
}

/// A finite set of sites with a fixed enumeration.
///
/// Cubes keep their geometric description so that callers which need the
/// radius (suitability tests, truncations) can recover it.
#[derive(Clone, Debug)]
pub struct SiteSet {
    dim: usize,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    cube: Option<Cube>,
}

impl PartialEq for SiteSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.sites == other.sites
    }
}

impl SiteSet {
    pub fn cube(cube: Cube) -> Self {
        let sites = cube.sites();
        let mut set = Self::from_sites(cube.dim(), sites);
        set.cube = Some(cube);
        set
    }

    pub fn centered_cube(dim: usize, radius: usize) -> Self {
        Self::cube(Cube::origin(dim, radius))
    }

    /// Builds a set from an explicit list; duplicates are dropped, order kept.
    pub fn from_sites(dim: usize, sites: impl IntoIterator<Item = Site>) -> Self {
        let mut index = HashMap::new();
        let mut list = Vec::new();
        for s in sites {
            assert_eq!(s.len(), dim, "site dimension mismatch");
            if !index.contains_key(&s) {
                index.insert(s.clone(), list.len());
                list.push(s);
            }
        }
        Self {
            dim,
            sites: list,
            index,
            cube: None,
        }
    }

    /// `Λ_outer(0) ∖ Λ_{inner_half}(0)` where the inner cube is `{|n|_∞ ≤ inner/2}`
    /// with real-valued comparison.
    pub fn annulus(dim: usize, inner: usize, outer: usize) -> Self {
        let half = inner as f64 / 2.0;
        let sites = Cube::origin(dim, outer)
            .sites()
            .into_iter()
            .filter(|n| sup_norm(n) as f64 > half);
        Self::from_sites(dim, sites)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    pub fn index_of(&self, n: &[i64]) -> Option<usize> {
        self.index.get(n).copied()
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        self.index.contains_key(n)
    }

    pub fn as_cube(&self) -> Option<&Cube> {
        self.cube.as_ref()
    }

    pub fn is_subset_of(&self, other: &SiteSet) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    /// Values on `self` copied into the enumeration of `target`; sites of
    /// `target` outside `self` get zero.
    pub fn transfer(&self, values: &[f64], target: &SiteSet) -> Vec<f64> {
        target
            .sites()
            .iter()
            .map(|s| self.index_of(s).map_or(0.0, |i| values[i]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_enumeration_is_lexicographic() {
        let c = Cube::new(vec![1, -1], 1);
        let s = c.sites();
        assert_eq!(s.len(), 9);
        assert_eq!(s[0], vec![0, -2]);
        assert_eq!(s[1], vec![0, -1]);
        assert_eq!(s[8], vec![2, 0]);
        let set = SiteSet::cube(c);
        assert_eq!(set.index_of(&[1, -1]), Some(4));
        assert_eq!(set.index_of(&[3, 0]), None);
    }

    #[test]
    fn annulus_excludes_inner_half() {
        let a = SiteSet::annulus(1, 8, 24);
        assert_eq!(a.len(), 2 * 20);
        assert!(!a.contains(&[4]));
        assert!(a.contains(&[5]));
        assert!(a.contains(&[-24]));
        let odd = SiteSet::annulus(1, 5, 6);
        assert!(!odd.contains(&[2]));
        assert!(odd.contains(&[3]));
    }

    #[test]
    fn wrap_stays_in_unit_interval() {
        for t in [-1e-18, -0.25, 0.0, 0.999_999_999, 1.0, 7.3, -3.7] {
            let w = wrap_unit(t);
            assert!((0.0..1.0).contains(&w), "{t} -> {w}");
        }
        assert!((torus_delta(0.99, 0.01) + 0.02).abs() < 1e-15);
    }

    #[test]
    fn w_values() {
        assert_eq!(potential_w(&[0.0, 0.0]), 4.0);
        assert!(potential_w(&[0.25]).abs() < 1e-15);
        assert!((potential_w(&[0.5]) + 2.0).abs() < 1e-15);
    }
}
