//! Floquet fibers of the periodic primal operator and of its dual.
//!
//! For `α_j = p_j/q_j` the primal operator `Δ + λf(x + α⋆n)` is periodic
//! with period `q_j` along axis `j`. Its Bloch fiber at quasimomentum `θ`
//! lives on `∏[0, q_j)`. The dual fiber at phase `θ` lives on `∏ℤ_{q_j}` with
//! diagonal `W(θ + α⋆m)` and hops `λ f̂(−k) e(−k·x)` from `m` to `m + k`.
//! The map `ψ(n) = Σ_m φ(m) e((θ + α⋆m)·n)` is a discrete Fourier transform
//! between the two, so the spectra agree fiber by fiber.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::DualityError;
use crate::lattice::{potential_w, wrap_unit};
use crate::model::ModelParams;
use crate::operator::DEFAULT_DENSE_CAP;

/// Largest denominator tried by [`rationalize`].
pub const MAX_DENOMINATOR: u64 = 4096;
const RATIONAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalFrequency {
    pub numerators: Vec<u64>,
    pub denominators: Vec<u64>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl RationalFrequency {
    /// Reduced fractions `p_j/q_j`; requires `q_j ≥ 1` and `p_j ≤ q_j`.
    pub fn new(numerators: Vec<u64>, denominators: Vec<u64>) -> Result<Self, DualityError> {
        if numerators.len() != denominators.len() || numerators.is_empty() {
            return Err(DualityError::DimensionMismatch(format!(
                "{} numerators for {} denominators",
                numerators.len(),
                denominators.len()
            )));
        }
        let mut p = Vec::with_capacity(numerators.len());
        let mut q = Vec::with_capacity(numerators.len());
        for (&a, &b) in numerators.iter().zip(&denominators) {
            if b == 0 || a > b {
                return Err(DualityError::IrrationalFrequency(format!("{a}/{b} is not a frequency in [0, 1]")));
            }
            let g = gcd(a, b).max(1);
            p.push(a / g);
            q.push(b / g);
        }
        Ok(Self {
            numerators: p,
            denominators: q,
        })
    }

    pub fn dim(&self) -> usize {
        self.denominators.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.numerators
            .iter()
            .zip(&self.denominators)
            .map(|(&p, &q)| p as f64 / q as f64)
            .collect()
    }

    /// Number of sites in one period cell, `∏ q_j`.
    pub fn cell_size(&self) -> Option<usize> {
        self.denominators
            .iter()
            .try_fold(1usize, |acc, &q| acc.checked_mul(q as usize))
    }

    /// `lcm(q_1, …, q_d)`.
    pub fn period(&self) -> u64 {
        self.denominators.iter().fold(1, |acc, &q| acc / gcd(acc, q) * q)
    }
}

/// Smallest-denominator fractions within `1e−12` of each component.
pub fn rationalize(alpha: &[f64]) -> Result<RationalFrequency, DualityError> {
    let mut p = Vec::with_capacity(alpha.len());
    let mut q = Vec::with_capacity(alpha.len());
    for &a in alpha {
        let hit = (1..=MAX_DENOMINATOR).find_map(|den| {
            let num = (a * den as f64).round();
            ((a - num / den as f64).abs() <= RATIONAL_TOL && num >= 0.0).then_some((num as u64, den))
        });
        match hit {
            Some((num, den)) => {
                p.push(num);
                q.push(den);
            }
            None => {
                return Err(DualityError::IrrationalFrequency(format!(
                    "{a} has no denominator ≤ {MAX_DENOMINATOR}"
                )))
            }
        }
    }
    RationalFrequency::new(p, q)
}

/// `e^{2πit}` with `t` reduced mod 1 first.
fn phase(t: f64) -> Complex<f64> {
    let t = 2.0 * std::f64::consts::PI * wrap_unit(t);
    Complex::new(t.cos(), t.sin())
}

/// Lexicographic enumeration of `∏[0, q_j)`, last axis fastest.
fn cell_sites(q: &[u64]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for &qj in q {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..qj).map(move |c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    out
}

fn cell_index(q: &[u64], c: &[i64]) -> usize {
    c.iter()
        .zip(q)
        .fold(0usize, |acc, (&cj, &qj)| acc * qj as usize + cj.rem_euclid(qj as i64) as usize)
}

fn check_size(freq: &RationalFrequency) -> Result<usize, DualityError> {
    match freq.cell_size() {
        Some(n) if n <= DEFAULT_DENSE_CAP => Ok(n),
        n => Err(DualityError::FiberTooLarge {
            size: n.unwrap_or(usize::MAX),
            cap: DEFAULT_DENSE_CAP,
        }),
    }
}

/// Bloch fiber of `Δ + λf(x + α⋆n)` at quasimomentum `θ`, with
/// `ψ(n + q_j e_j) = e(q_j θ_j) ψ(n)`.
pub fn primal_fiber(
    params: &ModelParams,
    freq: &RationalFrequency,
    theta: &[f64],
) -> Result<DMatrix<Complex<f64>>, DualityError> {
    let n = check_size(freq)?;
    let q = &freq.denominators;
    let alpha = freq.values();
    let x = &params.phase;
    let mut m = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
    for (i, site) in cell_sites(q).iter().enumerate() {
        let y: Vec<f64> = (0..freq.dim()).map(|j| x[j] + site[j] as f64 * alpha[j]).collect();
        m[(i, i)] += params.coupling * params.potential.evaluate(&y);
        for j in 0..freq.dim() {
            let c: Vec<i64> = site.iter().map(|&v| v as i64).collect();
            for s in [-1i64, 1] {
                let mut t = c.clone();
                t[j] += s;
                let wrap = t[j].div_euclid(q[j] as i64);
                let target = cell_index(q, &t);
                m[(i, target)] += phase(wrap as f64 * q[j] as f64 * theta[j]);
            }
        }
    }
    Ok(m)
}

/// Dual fiber at phase `θ` over the orbit `∏ℤ_{q_j}`, carrying the Bloch
/// factor `e(−k·x)` on each hop.
pub fn dual_fiber(
    params: &ModelParams,
    freq: &RationalFrequency,
    theta: &[f64],
) -> Result<DMatrix<Complex<f64>>, DualityError> {
    let n = check_size(freq)?;
    let q = &freq.denominators;
    let alpha = freq.values();
    let x = &params.phase;
    let mut m = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
    for (i, site) in cell_sites(q).iter().enumerate() {
        let y: Vec<f64> = (0..freq.dim()).map(|j| theta[j] + site[j] as f64 * alpha[j]).collect();
        m[(i, i)] += potential_w(&y);
        for k in params.potential.coefficients().keys() {
            let minus: Vec<i64> = k.iter().map(|&v| -v).collect();
            let coef = params.coupling * params.potential.coefficient(&minus);
            let kx: f64 = k.iter().zip(x).map(|(&kj, &xj)| kj as f64 * xj).sum();
            let t: Vec<i64> = site.iter().zip(k).map(|(&s, &kj)| s as i64 + kj).collect();
            m[(i, cell_index(q, &t))] += phase(-kx) * coef;
        }
    }
    Ok(m)
}

fn fiber_spectrum(m: DMatrix<Complex<f64>>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Hausdorff distance between two sorted point sets.
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    fn one_way(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .map(|&x| {
                let i = b.partition_point(|&y| y < x);
                let lo = i.checked_sub(1).map_or(f64::INFINITY, |j| x - b[j]);
                let hi = b.get(i).map_or(f64::INFINITY, |&y| y - x);
                lo.min(hi)
            })
            .fold(0.0, f64::max)
    }
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one_way(a, b).max(one_way(b, a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationReport {
    pub frequency: RationalFrequency,
    pub fiber_size: usize,
    pub fibers: usize,
    /// Largest sorted-eigenvalue difference within one fiber pair.
    pub max_fiber_mismatch: f64,
    /// Hausdorff distance between the unions over all fibers.
    pub mismatch: f64,
    pub primal_spectrum: Vec<f64>,
    pub dual_spectrum: Vec<f64>,
}

/// Compares the primal fiber at `(x, θ)` with the dual fiber at `(θ, x)`
/// for `θ_j = i/(n q_j)`, `i < n`, on every axis.
pub fn fourier_conjugation_check(params: &ModelParams, thetas_per_axis: usize) -> Result<ConjugationReport, DualityError> {
    let freq = rationalize(&params.frequency)?;
    conjugation_check_exact(params, &freq, thetas_per_axis)
}

/// As [`fourier_conjugation_check`] with the fractions given explicitly.
pub fn conjugation_check_exact(
    params: &ModelParams,
    freq: &RationalFrequency,
    thetas_per_axis: usize,
) -> Result<ConjugationReport, DualityError> {
    if freq.dim() != params.dim() {
        return Err(DualityError::DimensionMismatch(format!(
            "{}-dimensional frequency for a {}-dimensional model",
            freq.dim(),
            params.dim()
        )));
    }
    let size = check_size(freq)?;
    let n = thetas_per_axis.max(1);
    let q = &freq.denominators;
    let counts: Vec<u64> = vec![n as u64; freq.dim()];
    let mut primal = Vec::new();
    let mut dual = Vec::new();
    let mut worst: f64 = 0.0;
    let mut fibers = 0;
    for idx in cell_sites(&counts) {
        let theta: Vec<f64> = idx
            .iter()
            .zip(q)
            .map(|(&i, &qj)| i as f64 / (n as f64 * qj as f64))
            .collect();
        let a = fiber_spectrum(primal_fiber(params, freq, &theta)?);
        let b = fiber_spectrum(dual_fiber(params, freq, &theta)?);
        worst = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(worst, f64::max);
        primal.extend(a);
        dual.extend(b);
        fibers += 1;
    }
    primal.sort_by(f64::total_cmp);
    dual.sort_by(f64::total_cmp);
    Ok(ConjugationReport {
        frequency: freq.clone(),
        fiber_size: size,
        fibers,
        max_fiber_mismatch: worst,
        mismatch: hausdorff(&primal, &dual),
        primal_spectrum: primal,
        dual_spectrum: dual,
    })
}
