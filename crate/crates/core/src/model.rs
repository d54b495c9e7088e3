//! Model data: the potential `f` through its Fourier coefficients, the
//! coupling, frequency and phase, and the long-range hopping used by the
//! dual operator.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{sup_norm, Site, SiteSet};

/// Relative slack when comparing coefficients against the decay envelope.
const DECAY_SLACK: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("coefficient at k = {k:?} has |f̂(k)| = {value} > {bound}")]
    DecayViolation { k: Site, value: f64, bound: f64 },
    #[error("potential is constant: no nonzero coefficient with k ≠ 0")]
    ConstantPotential,
    #[error("coefficients are not symmetric: f̂({k:?}) = {value} but f̂(-k) = {mirror}")]
    AsymmetricCoefficients { k: Site, value: f64, mirror: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot read potential file: {0}")]
    Io(String),
    #[error("cannot parse potential file: {0}")]
    Parse(String),
}

/// A real trigonometric polynomial `f(y) = Σ_k f̂(k) e(k·y)` with
/// `f̂(-k) = f̂(k)` and `|f̂(k)| ≤ C e^{-η|k|_∞}`.
///
/// The prefactor `C` is 1 unless set explicitly; callers that want the
/// normalized form rescale the coupling themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    dim: usize,
    coefficients: BTreeMap<Site, f64>,
    decay_rate: f64,
    prefactor: f64,
    sup_norm: f64,
}

impl PotentialSpec {
    /// Validates raw coefficients against `|f̂(k)| ≤ e^{-η|k|_∞}`.
    pub fn validate(
        dim: usize,
        raw: impl IntoIterator<Item = (Site, f64)>,
        decay_rate: f64,
    ) -> Result<Self, ModelError> {
        Self::validate_with_prefactor(dim, raw, decay_rate, 1.0)
    }

    pub fn validate_with_prefactor(
        dim: usize,
        raw: impl IntoIterator<Item = (Site, f64)>,
        decay_rate: f64,
        prefactor: f64,
    ) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::InvalidParameter("dimension must be positive".into()));
        }
        if !(decay_rate > 0.0 && decay_rate.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "decay rate must be positive, got {decay_rate}"
            )));
        }
        if !(prefactor > 0.0 && prefactor.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "prefactor must be positive, got {prefactor}"
            )));
        }
        let mut coefficients = BTreeMap::new();
        for (k, v) in raw {
            if k.len() != dim {
                return Err(ModelError::DimensionMismatch {
                    expected: dim,
                    got: k.len(),
                });
            }
            if !v.is_finite() {
                return Err(ModelError::InvalidParameter(format!(
                    "coefficient at {k:?} is not finite"
                )));
            }
            if v != 0.0 {
                *coefficients.entry(k).or_insert(0.0) += v;
            }
        }
        for (k, &v) in &coefficients {
            let bound = prefactor * (-decay_rate * sup_norm(k) as f64).exp();
            if v.abs() > bound * (1.0 + DECAY_SLACK) {
                return Err(ModelError::DecayViolation {
                    k: k.clone(),
                    value: v.abs(),
                    bound,
                });
            }
            let neg: Site = k.iter().map(|c| -c).collect();
            let mirror = coefficients.get(&neg).copied().unwrap_or(0.0);
            if (mirror - v).abs() > 1e-15 * (1.0 + v.abs()) {
                return Err(ModelError::AsymmetricCoefficients {
                    k: k.clone(),
                    value: v,
                    mirror,
                });
            }
        }
        if !coefficients.keys().any(|k| k.iter().any(|&c| c != 0)) {
            return Err(ModelError::ConstantPotential);
        }
        let sup_norm = coefficients.values().map(|v| v.abs()).sum();
        Ok(Self {
            dim,
            coefficients,
            decay_rate,
            prefactor,
            sup_norm,
        })
    }

    /// `f(y) = Σ_j 2cos(2π y_j)`, i.e. `f̂(±e_j) = 1`, with `η = 1` and
    /// prefactor `e` so that the decay envelope is met.
    pub fn cosine(dim: usize) -> Self {
        let mut raw = Vec::new();
        for j in 0..dim {
            for s in [-1i64, 1] {
                let mut k = vec![0; dim];
                k[j] = s;
                raw.push((k, 1.0));
            }
        }
        Self::validate_with_prefactor(dim, raw, 1.0, std::f64::consts::E)
            .expect("cosine potential is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &BTreeMap<Site, f64> {
        &self.coefficients
    }

    pub fn coefficient(&self, k: &[i64]) -> f64 {
        self.coefficients.get(k).copied().unwrap_or(0.0)
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// `Σ_k |f̂(k)|`: an upper bound for `‖f‖_∞` and for `‖T‖`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Largest `|k|_∞` in the support.
    pub fn range(&self) -> i64 {
        self.coefficients.keys().map(|k| sup_norm(k)).max().unwrap_or(0)
    }

    /// Real part of the Fourier sum; the imaginary part cancels by symmetry.
    pub fn evaluate(&self, y: &[f64]) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        self.coefficients
            .iter()
            .map(|(k, &c)| {
                let arg: f64 = k.iter().zip(y).map(|(&kj, &yj)| kj as f64 * yj).sum();
                c * (two_pi * arg).cos()
            })
            .sum()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let file: PotentialFile =
            toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        file.into_spec()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_file(&self) -> PotentialFile {
        PotentialFile {
            dimension: self.dim,
            decay_rate: self.decay_rate,
            prefactor: Some(self.prefactor),
            coefficients: self
                .coefficients
                .iter()
                .map(|(k, &value)| CoefficientEntry {
                    k: k.clone(),
                    value,
                })
                .collect(),
        }
    }
}

/// On-disk schema of a potential (TOML).
///
/// ```toml
/// dimension = 1
/// decay_rate = 0.5
/// prefactor = 1.0        # optional
///
/// [[coefficients]]
/// k = [1]
/// value = 0.5
///
/// [[coefficients]]
/// k = [-1]
/// value = 0.5
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialFile {
    pub dimension: usize,
    pub decay_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefactor: Option<f64>,
    #[serde(default)]
    pub coefficients: Vec<CoefficientEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub k: Site,
    pub value: f64,
}

impl PotentialFile {
    pub fn into_spec(self) -> Result<PotentialSpec, ModelError> {
        PotentialSpec::validate_with_prefactor(
            self.dimension,
            self.coefficients.into_iter().map(|c| (c.k, c.value)),
            self.decay_rate,
            self.prefactor.unwrap_or(1.0),
        )
    }
}

/// Potential, coupling `λ`, frequency `α ∈ [0,1]^d` and phase `x ∈ 𝕋^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub potential: PotentialSpec,
    pub coupling: f64,
    pub frequency: Vec<f64>,
    pub phase: Vec<f64>,
}

impl ModelParams {
    /// The phase is reduced mod 1. `λ = 0` is accepted as the decoupled limit.
    pub fn new(
        potential: PotentialSpec,
        coupling: f64,
        frequency: Vec<f64>,
        phase: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let d = potential.dim();
        for v in [&frequency, &phase] {
            if v.len() != d {
                return Err(ModelError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "coupling must be finite and nonnegative, got {coupling}"
            )));
        }
        if let Some(a) = frequency.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(ModelError::InvalidParameter(format!(
                "frequency component {a} outside [0,1]"
            )));
        }
        if phase.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidParameter("phase must be finite".into()));
        }
        let phase = phase.into_iter().map(crate::lattice::wrap_unit).collect();
        Ok(Self {
            potential,
            coupling,
            frequency,
            phase,
        })
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn with_phase(&self, phase: Vec<f64>) -> Self {
        let mut p = self.clone();
        p.phase = phase.into_iter().map(crate::lattice::wrap_unit).collect();
        p
    }

    pub fn with_frequency(&self, frequency: Vec<f64>) -> Self {
        let mut p = self.clone();
        p.frequency = frequency;
        p
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        let mut p = self.clone();
        p.coupling = coupling;
        p
    }
}

/// Hopping `Tψ(n) = Σ_{k≠0} t_{n,k} ψ(n+k)`.
///
/// Translation-invariant coefficients live in `uniform`; entries of
/// `site_dependent`, keyed by `(n, k)`, override them.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct HoppingSpec {
    pub uniform: BTreeMap<Site, f64>,
    pub site_dependent: BTreeMap<(Site, Site), f64>,
}

impl HoppingSpec {
    /// `t_k = f̂(k)` for `k ≠ 0`.
    pub fn from_potential(potential: &PotentialSpec) -> Self {
        Self {
            uniform: potential
                .coefficients()
                .iter()
                .filter(|(k, _)| k.iter().any(|&c| c != 0))
                .map(|(k, &v)| (k.clone(), v))
                .collect(),
            site_dependent: BTreeMap::new(),
        }
    }

    pub fn coefficient(&self, n: &[i64], k: &[i64]) -> f64 {
        if !self.site_dependent.is_empty() {
            if let Some(&v) = self.site_dependent.get(&(n.to_vec(), k.to_vec())) {
                return v;
            }
        }
        self.uniform.get(k).copied().unwrap_or(0.0)
    }

    /// Every offset with a possibly nonzero coefficient.
    pub fn offsets(&self) -> Vec<Site> {
        let mut ks: Vec<Site> = self.uniform.keys().cloned().collect();
        ks.extend(self.site_dependent.keys().map(|(_, k)| k.clone()));
        ks.sort();
        ks.dedup();
        ks.retain(|k| k.iter().any(|&c| c != 0));
        ks
    }

    /// Checks `|t_{n,k}| ≤ C e^{-η|k|_∞}` on every stored entry.
    pub fn validate_decay(&self, decay_rate: f64, prefactor: f64) -> Result<(), ModelError> {
        let entries = self
            .uniform
            .iter()
            .map(|(k, v)| (k, *v))
            .chain(self.site_dependent.iter().map(|((_, k), v)| (k, *v)));
        for (k, v) in entries {
            let bound = prefactor * (-decay_rate * sup_norm(k) as f64).exp();
            if v.abs() > bound * (1.0 + DECAY_SLACK) {
                return Err(ModelError::DecayViolation {
                    k: k.clone(),
                    value: v.abs(),
                    bound,
                });
            }
        }
        Ok(())
    }
}

/// `(Tψ)(n) = Σ_{k≠0, n+k∈Ξ} t_{n,k} ψ(n+k)` for `ψ` given on the
/// enumeration of `domain`.
pub fn apply_hopping(spec: &HoppingSpec, psi: &[f64], domain: &SiteSet) -> Vec<f64> {
    assert_eq!(psi.len(), domain.len(), "vector does not match its domain");
    let offsets = spec.offsets();
    domain
        .sites()
        .iter()
        .map(|n| {
            offsets
                .iter()
                .filter_map(|k| {
                    let target: Site = n.iter().zip(k).map(|(a, b)| a + b).collect();
                    domain
                        .index_of(&target)
                        .map(|j| spec.coefficient(n, k) * psi[j])
                })
                .sum()
        })
        .collect()
}
