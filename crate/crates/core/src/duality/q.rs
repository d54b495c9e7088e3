//! The intertwiner `Qg(x) = Σ_k q_k(x) g(x + α⋆k)` on a phase grid.
//!
//! `χ_G` and `ψ` are continued off the grid by multilinear interpolation
//! over good cells. At grid nodes they take the node values, so
//! `q_k(y − α⋆k) = χ_G(y) ψ(y; −k)` is exact there and `Q*` needs no
//! interpolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::TorusGrid;
use crate::lattice::{potential_w, shift_phase, Cube, Site, SiteSet};
use crate::multiscale::TrajectoryField;

/// Real trigonometric polynomial `Σ a_k cos(2πk·x) + b_k sin(2πk·x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub terms: Vec<(Site, f64, f64)>,
}

impl TrigPolynomial {
    /// Uniform coefficients in `[−1, 1]` for every `k` with `|k|_∞ ≤ degree`.
    pub fn random(dim: usize, degree: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = Cube::origin(dim, degree)
            .sites()
            .into_iter()
            .map(|k| (k, rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
            .collect();
        Self { terms }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| {
                let t = 2.0 * std::f64::consts::PI * k.iter().zip(x).map(|(&kj, &xj)| kj as f64 * xj).sum::<f64>();
                a * t.cos() + b * t.sin()
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QAssembly {
    pub field: TrajectoryField,
    pub window: usize,
    /// Labels `k` with `|k|_∞ ≤ window`.
    pub labels: Vec<Site>,
    /// `q_k(x)` per node, in label order.
    pub coefficients: Vec<Vec<f64>>,
    /// `χ_G` per node.
    pub mask: Vec<bool>,
}

impl QAssembly {
    pub fn new(field: TrajectoryField, window: usize) -> Self {
        let dim = field.grid.dim;
        let labels = Cube::origin(dim, window).sites();
        let local = SiteSet::centered_cube(dim, field.radius());
        let alpha = field.params.frequency.clone();
        let coefficients = (0..field.grid.len())
            .into_par_iter()
            .map(|i| {
                let x = field.grid.point(i);
                labels
                    .iter()
                    .map(|k| {
                        let minus: Vec<i64> = k.iter().map(|&v| -v).collect();
                        local.index_of(&minus).map_or(0.0, |idx| {
                            field
                                .interpolate(&shift_phase(&x, &alpha, k))
                                .map_or(0.0, |(_, psi)| psi[idx])
                        })
                    })
                    .collect()
            })
            .collect();
        let mask = field.mask();
        Self {
            field,
            window,
            labels,
            coefficients,
            mask,
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.field.grid
    }

    fn alpha(&self) -> &[f64] {
        &self.field.params.frequency
    }

    pub fn apply(&self, g: &TrigPolynomial) -> Vec<f64> {
        let grid = self.grid();
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let x = grid.point(i);
                self.labels
                    .iter()
                    .zip(&self.coefficients[i])
                    .filter(|(_, &q)| q != 0.0)
                    .map(|(k, &q)| q * g.eval(&shift_phase(&x, self.alpha(), k)))
                    .sum()
            })
            .collect()
    }

    /// `Q*h(y) = χ_G(y) Σ_k ψ(y; −k) h(y − α⋆k)`.
    pub fn apply_adjoint(&self, h: &TrigPolynomial) -> Vec<f64> {
        let grid = self.grid();
        let local = SiteSet::centered_cube(grid.dim, self.field.radius());
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let Some(s) = self.field.good(i) else { return 0.0 };
                let y = grid.point(i);
                self.labels
                    .iter()
                    .map(|k| {
                        let minus: Vec<i64> = k.iter().map(|&v| -v).collect();
                        local
                            .index_of(&minus)
                            .map_or(0.0, |idx| s.psi[idx] * h.eval(&shift_phase(&y, self.alpha(), &minus)))
                    })
                    .sum()
            })
            .collect()
    }

    /// `Q*Qg(y) = χ_G(y) Σ_n χ_G(z_n) g(z_n) Σ_k ψ(y; −k) ψ(z_n; −k−n)` with
    /// `z_n = y + α⋆n` and `k, k + n` in the window.
    pub fn apply_gram(&self, g: &TrigPolynomial) -> Vec<f64> {
        let grid = self.grid();
        let dim = grid.dim;
        let local = SiteSet::centered_cube(dim, self.field.radius());
        let window = self.window as i64;
        let diffs = Cube::origin(dim, 2 * self.window).sites();
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let Some(s) = self.field.good(i) else { return 0.0 };
                let y = grid.point(i);
                let mut total = 0.0;
                for n in &diffs {
                    let z = shift_phase(&y, self.alpha(), n);
                    let Some((_, psi_z)) = (if n.iter().all(|&c| c == 0) {
                        Some((0.0, s.psi.clone()))
                    } else {
                        self.field.interpolate(&z)
                    }) else {
                        continue;
                    };
                    let mut overlap = 0.0;
                    for k in &self.labels {
                        let kn: Vec<i64> = k.iter().zip(n).map(|(a, b)| a + b).collect();
                        if kn.iter().any(|c| c.abs() > window) {
                            continue;
                        }
                        let a: Vec<i64> = k.iter().map(|&v| -v).collect();
                        let b: Vec<i64> = kn.iter().map(|&v| -v).collect();
                        if let (Some(ia), Some(ib)) = (local.index_of(&a), local.index_of(&b)) {
                            overlap += s.psi[ia] * psi_z[ib];
                        }
                    }
                    if overlap != 0.0 {
                        total += overlap * g.eval(&z);
                    }
                }
                total
            })
            .collect()
    }

    /// `χ_G g` on the grid.
    pub fn masked(&self, g: &TrigPolynomial) -> Vec<f64> {
        let grid = self.grid();
        (0..grid.len())
            .map(|i| if self.mask[i] { g.eval(&grid.point(i)) } else { 0.0 })
            .collect()
    }

    pub fn good_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub resolution: usize,
    /// `max_g |‖Qg‖² − ‖χ_G g‖²|`.
    pub norm_deviation: f64,
    /// `max_g ‖Q*Qg − χ_G g‖` in grid `L²`.
    pub gram_deviation: f64,
    /// `max_g max_y |Q*Qg(y) − χ_G g(y)|`.
    pub gram_sup_deviation: f64,
    /// `max |⟨Qg, h⟩ − ⟨g, Q*h⟩|` over consecutive test-function pairs.
    pub adjointness: f64,
    /// `max_{y ∈ G} |Σ_k |q_k(y)|² − 1|`.
    pub coefficient_mass: f64,
}

fn inner(a: &[f64], b: &[f64], w: f64) -> f64 {
    w * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

pub fn q_isometry_check(assembly: &QAssembly, tests: &[TrigPolynomial]) -> IsometryReport {
    let grid = assembly.grid();
    let w = grid.weight();
    let samples: Vec<Vec<f64>> = tests
        .iter()
        .map(|g| (0..grid.len()).map(|i| g.eval(&grid.point(i))).collect())
        .collect();
    let mut norm_deviation: f64 = 0.0;
    let mut gram_deviation: f64 = 0.0;
    let mut gram_sup_deviation: f64 = 0.0;
    let mut adjointness: f64 = 0.0;
    let applied: Vec<Vec<f64>> = tests.iter().map(|g| assembly.apply(g)).collect();
    for (t, g) in tests.iter().enumerate() {
        let chi_g = assembly.masked(g);
        let qg = &applied[t];
        norm_deviation = norm_deviation.max((inner(qg, qg, w) - inner(&chi_g, &chi_g, w)).abs());
        let d: Vec<f64> = assembly.apply_gram(g).iter().zip(&chi_g).map(|(a, b)| a - b).collect();
        gram_deviation = gram_deviation.max(inner(&d, &d, w).sqrt());
        gram_sup_deviation = d.iter().fold(gram_sup_deviation, |m, v| m.max(v.abs()));
        if tests.len() > 1 {
            let h = &tests[(t + 1) % tests.len()];
            let qsh = assembly.apply_adjoint(h);
            let h_samples = &samples[(t + 1) % tests.len()];
            adjointness = adjointness.max((inner(qg, h_samples, w) - inner(&samples[t], &qsh, w)).abs());
        }
    }
    let coefficient_mass = assembly
        .coefficients
        .iter()
        .zip(&assembly.mask)
        .filter(|(_, &m)| m)
        .map(|(q, _)| (q.iter().map(|v| v * v).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    IsometryReport {
        resolution: grid.resolution,
        norm_deviation,
        gram_deviation,
        gram_sup_deviation,
        adjointness,
        coefficient_mass,
    }
}

/// Max over nodes `x` and labels `|ℓ|_∞ ≤ L` of the defect in
/// `W(x) q_ℓ(x) + λ Σ_k f̂(k) q_{ℓ−k}(x + α⋆k) = γ(x + α⋆ℓ) q_ℓ(x)`,
/// where `q_{ℓ−k}(x + α⋆k) = χ_G(y) ψ(y; k − ℓ)` with `y = x + α⋆ℓ`.
pub fn intertwining_residual(assembly: &QAssembly) -> f64 {
    let field = &assembly.field;
    let grid = field.grid;
    let params = &field.params;
    let local = SiteSet::centered_cube(grid.dim, field.radius());
    let lambda = params.coupling;
    let coefs: Vec<(Site, f64)> = params.potential.coefficients().iter().map(|(k, &v)| (k.clone(), v)).collect();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let w = potential_w(&x);
            let mut worst: f64 = 0.0;
            for l in &assembly.labels {
                let y = shift_phase(&x, &params.frequency, l);
                let Some((gamma, psi)) = field.interpolate(&y) else { continue };
                let at = |m: &[i64]| local.index_of(m).map_or(0.0, |j| psi[j]);
                let minus: Vec<i64> = l.iter().map(|&v| -v).collect();
                let q_l = at(&minus);
                let hop: f64 = coefs
                    .iter()
                    .map(|(k, f)| {
                        let m: Vec<i64> = k.iter().zip(l).map(|(a, b)| a - b).collect();
                        f * at(&m)
                    })
                    .sum();
                worst = worst.max((w * q_l + lambda * hop - gamma * q_l).abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, PotentialSpec};
    use crate::multiscale::{ContinuationConfig, Growth, MultiscaleConfig, RhoRule, ScaleSchedule, SimplicityRule};

    fn field(lambda: f64, n: usize) -> TrajectoryField {
        let p = ModelParams::new(PotentialSpec::cosine(1), lambda, vec![0.618034], vec![0.0]).unwrap();
        let cfg = MultiscaleConfig {
            schedule: ScaleSchedule::new(3, Growth::Geometric(2), lambda, 2).unwrap(),
            kappa: None,
            rho: RhoRule::Fixed(1),
            continuation: ContinuationConfig {
                simplicity: SimplicityRule::Fixed(1e-6),
                ..Default::default()
            },
        };
        TrajectoryField::compute(&p, &cfg, TorusGrid::new(1, n))
    }

    #[test]
    fn decoupled_q_is_identity() {
        let a = QAssembly::new(field(0.0, 32), 4);
        assert_eq!(a.good_fraction(), 1.0);
        let g = TrigPolynomial::random(1, 3, 7);
        let qg = a.apply(&g);
        let want = a.masked(&g);
        assert!(qg.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-14));
        let r = q_isometry_check(&a, &[g, TrigPolynomial::random(1, 2, 8)]);
        assert!(r.gram_sup_deviation < 1e-14);
        assert!(r.norm_deviation < 1e-13);
        assert!(r.adjointness < 1e-13);
        assert_eq!(r.coefficient_mass, 0.0);
        assert_eq!(intertwining_residual(&a), 0.0);
    }

    #[test]
    fn zero_test_function() {
        let a = QAssembly::new(field(0.01, 16), 4);
        let r = q_isometry_check(&a, &[TrigPolynomial::zero()]);
        assert_eq!(r.norm_deviation, 0.0);
        assert_eq!(r.gram_deviation, 0.0);
    }
}
