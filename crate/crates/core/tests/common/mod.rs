//! Shared fixtures and independent numerical oracles.
#![allow(dead_code)]

use nalgebra::DMatrix;

use qps_core::lattice::sup_dist;
use qps_core::model::{ModelParams, PotentialSpec};
use qps_core::operator::BoxRestriction;

pub const GOLDEN: f64 = 0.618034;

pub fn amo(coupling: f64, alpha: f64, x: f64) -> ModelParams {
    ModelParams::new(PotentialSpec::cosine(1), coupling, vec![alpha], vec![x]).unwrap()
}

pub fn amo2(coupling: f64, alpha: [f64; 2], x: [f64; 2]) -> ModelParams {
    ModelParams::new(PotentialSpec::cosine(2), coupling, alpha.to_vec(), x.to_vec()).unwrap()
}

/// `Σ_j 2cos(2π y_j)`, written out independently of the library.
pub fn w(y: &[f64]) -> f64 {
    y.iter().map(|t| 2.0 * (std::f64::consts::TAU * t).cos()).sum()
}

/// Number of eigenvalues of the symmetric tridiagonal matrix `(a, b)`
/// strictly below `x`, by the Sturm sequence of leading minors.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..a.len() {
        let off = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] };
        q = a[i] - x - if i == 0 { 0.0 } else { off / q };
        if q == 0.0 {
            q = f64::EPSILON * (1.0 + x.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Ascending eigenvalues of a symmetric tridiagonal matrix with diagonal
/// `a` and off-diagonal `b`, by bisection on the Sturm count.
pub fn tridiagonal_eigenvalues(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let r: f64 = (0..n)
        .map(|i| {
            let l = if i > 0 { b[i - 1].abs() } else { 0.0 };
            let u = if i + 1 < n { b[i].abs() } else { 0.0 };
            a[i].abs() + l + u
        })
        .fold(0.0, f64::max)
        + 1.0;
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-r, r);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sturm_count(a, b, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Diagonal and first off-diagonal of a matrix.
pub fn tridiagonal_parts(m: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows();
    ((0..n).map(|i| m[(i, i)]).collect(), (1..n).map(|i| m[(i, i - 1)]).collect())
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs())).unwrap();
        a.swap_rows(c, p);
        inv.swap_rows(c, p);
        let d = a[(c, c)];
        for j in 0..n {
            a[(c, j)] /= d;
            inv[(c, j)] /= d;
        }
        for i in 0..n {
            if i != c {
                let f = a[(i, c)];
                if f != 0.0 {
                    for j in 0..n {
                        a[(i, j)] -= f * a[(c, j)];
                        inv[(i, j)] -= f * inv[(c, j)];
                    }
                }
            }
        }
    }
    inv
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Both suitability conditions evaluated from an independently inverted
/// shifted matrix. Tridiagonal (d = 1, nearest-neighbour) boxes only.
pub fn suitability_oracle(b: &BoxRestriction, e: f64, gamma: f64, tau: f64, radius: usize) -> bool {
    let n = b.side();
    let shifted = &b.matrix - DMatrix::identity(n, n) * e;
    let eig = {
        let (a, off) = tridiagonal_parts(&shifted);
        tridiagonal_eigenvalues(&a, &off)
    };
    let norm = 1.0 / eig.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let g = gauss_inverse(&shifted);
    let sites = b.sites.sites();
    let decay = (0..n).all(|i| {
        (0..n).all(|j| {
            let d = sup_dist(&sites[i], &sites[j]);
            2 * d < radius as i64 || g[(i, j)].abs() <= (-gamma * d as f64).exp()
        })
    });
    norm <= (radius as f64).powf(tau).exp() && decay
}
