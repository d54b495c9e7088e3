//! Python bindings for `qps-core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qps_core::duality::fourier_conjugation_check;
use qps_core::extension::{arcsine_mass, lipschitz_extension};
use qps_core::grid::TorusGrid;
use qps_core::lattice::potential_w;
use qps_core::model::{ModelParams, PotentialSpec};
use qps_core::multiscale::{
    run_multiscale, ContinuationConfig, Growth, MultiscaleConfig, RhoRule, ScaleSchedule, SimplicityRule,
};
use qps_core::operator::{build_dual, build_primal};
use qps_core::report::{execute, record_to_json, LoadedConfig, RunError, Subcommand};
use qps_core::spectral::{eig_sym, test_suitability, SuitabilityParams};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Potential, coupling, frequency and phase.
#[pyclass(name = "Model", module = "qps", frozen)]
struct PyModel {
    inner: ModelParams,
}

#[pymethods]
impl PyModel {
    /// `potential_file` is a TOML potential; without it `f = Σ 2cos(2πy_j)`.
    #[new]
    #[pyo3(signature = (coupling, frequency, phase, potential_file=None))]
    fn new(coupling: f64, frequency: Vec<f64>, phase: Vec<f64>, potential_file: Option<&str>) -> PyResult<Self> {
        let potential = match potential_file {
            Some(p) => PotentialSpec::load(p).map_err(value_err)?,
            None => PotentialSpec::cosine(frequency.len().max(1)),
        };
        let inner = ModelParams::new(potential, coupling, frequency, phase).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn coupling(&self) -> f64 {
        self.inner.coupling
    }

    #[getter]
    fn frequency(&self) -> Vec<f64> {
        self.inner.frequency.clone()
    }

    #[getter]
    fn phase(&self) -> Vec<f64> {
        self.inner.phase.clone()
    }

    /// Sorted eigenvalues of the dual operator on `Λ_radius(0)`.
    fn dual_eigenvalues(&self, radius: usize) -> PyResult<Vec<f64>> {
        let b = build_dual(&self.inner, vec![0; self.inner.dim()], radius).map_err(value_err)?;
        Ok(eig_sym(&b).map_err(runtime_err)?.values)
    }

    /// Sorted eigenvalues of the primal operator on `Λ_radius(0)`.
    fn primal_eigenvalues(&self, radius: usize) -> PyResult<Vec<f64>> {
        let b = build_primal(&self.inner, vec![0; self.inner.dim()], radius).map_err(value_err)?;
        Ok(eig_sym(&b).map_err(runtime_err)?.values)
    }

    /// Dense dual matrix on `Λ_radius(0)`, row by row.
    fn dual_matrix(&self, radius: usize) -> PyResult<Vec<Vec<f64>>> {
        let b = build_dual(&self.inner, vec![0; self.inner.dim()], radius).map_err(value_err)?;
        Ok(b.matrix.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    #[pyo3(signature = (radius, energy, gamma=0.4, tau=0.5))]
    fn suitability<'py>(
        &self,
        py: Python<'py>,
        radius: usize,
        energy: f64,
        gamma: f64,
        tau: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let b = build_dual(&self.inner, vec![0; self.inner.dim()], radius).map_err(value_err)?;
        let r = test_suitability(&b, energy, SuitabilityParams::new(gamma, tau)).map_err(runtime_err)?;
        let d = PyDict::new(py);
        d.set_item("resolvent_norm", r.resolvent_norm)?;
        d.set_item("resolvent_bound", r.resolvent_bound)?;
        d.set_item("resolvent_ok", r.resolvent_ok)?;
        d.set_item("decay_ok", r.decay_ok)?;
        d.set_item("pass", r.pass)?;
        Ok(d)
    }

    /// Certificates of a desk-schedule run `R_j = factor·R_{j−1}`, one dict
    /// per level.
    #[pyo3(signature = (r1, levels, factor=2, simplicity=None))]
    fn run_multiscale<'py>(
        &self,
        py: Python<'py>,
        r1: usize,
        levels: usize,
        factor: usize,
        simplicity: Option<f64>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let schedule =
            ScaleSchedule::new(r1, Growth::Geometric(factor), self.inner.coupling, levels).map_err(value_err)?;
        let mut continuation = ContinuationConfig::default();
        if let Some(s) = simplicity {
            continuation.simplicity = SimplicityRule::Fixed(s);
        }
        let config = MultiscaleConfig {
            schedule,
            kappa: None,
            rho: RhoRule::Desk,
            continuation,
        };
        let traj = run_multiscale(&self.inner, &config).map_err(runtime_err)?;
        traj.certificates
            .iter()
            .map(|c| {
                let d = PyDict::new(py);
                d.set_item("level", c.level)?;
                d.set_item("radius", c.radius)?;
                d.set_item("energy", c.energy)?;
                d.set_item("energy_diff", c.energy_diff)?;
                d.set_item("vector_diff", c.vector_diff)?;
                d.set_item("residual", c.residual)?;
                d.set_item("psi", c.psi.clone())?;
                Ok(d)
            })
            .collect()
    }

    /// Hausdorff distance between primal and dual Floquet spectra for a
    /// rational frequency.
    #[pyo3(signature = (thetas_per_axis=4))]
    fn conjugation_mismatch(&self, thetas_per_axis: usize) -> PyResult<f64> {
        Ok(fourier_conjugation_check(&self.inner, thetas_per_axis)
            .map_err(value_err)?
            .mismatch)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(coupling={}, frequency={:?}, phase={:?})",
            self.inner.coupling, self.inner.frequency, self.inner.phase
        )
    }
}

/// `W(x) = Σ 2cos(2πx_j)`.
#[pyfunction(name = "potential_w")]
fn py_potential_w(x: Vec<f64>) -> f64 {
    potential_w(&x)
}

#[pyfunction(name = "arcsine_mass")]
fn py_arcsine_mass(a: f64, b: f64) -> f64 {
    arcsine_mass(a, b)
}

/// Extends `values` from `mask` over a `resolution^dim` torus grid.
/// Returns the extended values and the declared and observed gradients.
#[pyfunction(name = "lipschitz_extension")]
#[pyo3(signature = (dim, resolution, mask, values, epsilon, delta, c=1.0))]
fn py_lipschitz_extension<'py>(
    py: Python<'py>,
    dim: usize,
    resolution: usize,
    mask: Vec<bool>,
    values: Vec<f64>,
    epsilon: f64,
    delta: f64,
    c: f64,
) -> PyResult<(Vec<f64>, Bound<'py, PyDict>)> {
    if dim == 0 || resolution < 2 {
        return Err(value_err("need dim ≥ 1 and resolution ≥ 2"));
    }
    let grid = TorusGrid::new(dim, resolution);
    let (field, report) = lipschitz_extension(grid, &mask, &values, epsilon, delta, c).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("bound", report.bound)?;
    d.set_item("max_grad_off_mask", report.max_grad_off_mask)?;
    d.set_item("within", report.within)?;
    Ok((field.values, d))
}

/// Runs a subcommand on a TOML config and returns the record as JSON,
/// without writing files.
#[pyfunction]
fn run_config(py: Python<'_>, path: &str, subcommand: &str) -> PyResult<String> {
    let sub: Subcommand = subcommand.parse().map_err(|e: RunError| value_err(e))?;
    let cfg = LoadedConfig::load(path).map_err(value_err)?;
    let (record, _) = py.detach(|| execute(&cfg, sub)).map_err(runtime_err)?;
    Ok(record_to_json(&record))
}

#[pymodule]
fn qps(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(py_potential_w, m)?)?;
    m.add_function(wrap_pyfunction!(py_arcsine_mass, m)?)?;
    m.add_function(wrap_pyfunction!(py_lipschitz_extension, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
