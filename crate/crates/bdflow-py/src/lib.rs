//! Python bindings for the bdflow core: model construction, scenario
//! initialization, time evolution and the analysis certificates.

use bdflow::constitutive::FluidModel;
use bdflow::diagnostics::{
    entropy_report, estimate_certificate, mass_drift, smoothing_certificate, CertificateKind,
};
use bdflow::evolution::{run, StepControl, Trajectory};
use bdflow::formulations::{hybrid_to_effective, identity_residuals, to_hybrid};
use bdflow::littlewood_paley::{besov_norm, build_cutoffs, BesovSpec, Exponent};
use bdflow::runner::{scenario_init, ScenarioSpec};
use bdflow::spectral_grid::{make_grid, Grid, ScalarField};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::sync::Arc;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Barotropic fluid model: power-law viscosity and pressure with a
/// reference density.
#[pyclass(name = "Model", from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: FluidModel,
    dim: usize,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (mu, alpha, gamma, rho_ref=1.0, dim=2))]
    fn new(mu: f64, alpha: f64, gamma: f64, rho_ref: f64, dim: usize) -> PyResult<Self> {
        let inner = FluidModel::new(mu, alpha, gamma, rho_ref, dim).map_err(value_err)?;
        Ok(PyModel { inner, dim })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn rho_ref(&self) -> f64 {
        self.inner.rho_ref
    }

    fn viscosity(&self, rho: f64) -> f64 {
        self.inner.viscosity(rho)
    }

    /// The second viscosity coefficient tied to the shear viscosity.
    fn second_viscosity(&self, rho: f64) -> f64 {
        self.inner.lambda_of(rho)
    }

    /// Potential whose gradient turns velocity into effective velocity.
    fn phi(&self, rho: f64) -> f64 {
        self.inner.phi_of(rho)
    }

    fn pressure(&self, rho: f64) -> f64 {
        self.inner.pressure(rho)
    }

    /// Relative pressure entropy (zero at the reference density).
    fn pressure_entropy(&self, rho: f64) -> f64 {
        self.inner.pi_of(rho)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(mu={}, alpha={}, gamma={}, rho_ref={}, dim={})",
            self.inner.mu, self.inner.alpha, self.inner.gamma, self.inner.rho_ref, self.dim
        )
    }
}

/// Hybrid state (density perturbation, divergence, curl, mean velocity)
/// on a periodic grid.
#[pyclass(name = "State", from_py_object)]
#[derive(Clone)]
struct PyState {
    grid: Arc<Grid>,
    inner: bdflow::formulations::HybridState,
}

#[pymethods]
impl PyState {
    #[getter]
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    #[getter]
    fn points(&self) -> usize {
        self.grid.points_per_axis()
    }

    /// Flattened (row-major) density perturbation samples.
    fn density_perturbation(&self) -> Vec<f64> {
        self.inner.q.values().to_vec()
    }

    /// Flattened (row-major) velocity-divergence samples.
    fn divergence(&self) -> Vec<f64> {
        self.inner.divv.values().to_vec()
    }

    #[getter]
    fn mean_velocity(&self) -> Vec<f64> {
        self.inner.mean_v.clone()
    }

    fn min_density(&self, model: &PyModel) -> f64 {
        self.inner.q.min() + model.inner.rho_ref
    }

    fn mass(&self, model: &PyModel) -> f64 {
        let volume = self.grid.cell_volume() * self.grid.len() as f64;
        self.inner.q.integral() + model.inner.rho_ref * volume
    }

    /// Entropy budget as a dict: kinetic, potential, dissipation_curl,
    /// dissipation_pressure, total.
    fn entropy(&self, py: Python<'_>, model: &PyModel) -> PyResult<Py<PyAny>> {
        let eff = hybrid_to_effective(&model.inner, &self.inner).map_err(value_err)?;
        let rep = entropy_report(&eff, &model.inner).map_err(value_err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("kinetic", rep.kinetic)?;
        d.set_item("potential", rep.potential)?;
        d.set_item("dissipation_curl", rep.dissipation_curl)?;
        d.set_item("dissipation_pressure", rep.dissipation_pressure)?;
        d.set_item("total", rep.total)?;
        Ok(d.into_any().unbind())
    }

    /// Structural identity residuals (mass, divergence, curl,
    /// reconstruction) of the two formulations on this state.
    fn identity_residuals(&self, model: &PyModel) -> PyResult<(f64, f64, f64, f64)> {
        let eff = hybrid_to_effective(&model.inner, &self.inner).map_err(value_err)?;
        let res = identity_residuals(&model.inner, &eff).map_err(value_err)?;
        Ok((res.mass, res.divergence, res.curl, res.reconstruction))
    }

    fn __repr__(&self) -> String {
        format!(
            "State(dim={}, points={}, max|q|={:.3e})",
            self.grid.dim(),
            self.grid.points_per_axis(),
            self.inner.q.max_abs()
        )
    }
}

/// Recorded evolution history.
#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    grid: Arc<Grid>,
    inner: Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.states.len()
    }

    fn state(&self, i: usize) -> PyResult<PyState> {
        let inner = self
            .inner
            .states
            .get(i)
            .ok_or_else(|| PyValueError::new_err("sample index out of range"))?
            .clone();
        Ok(PyState {
            grid: self.grid.clone(),
            inner,
        })
    }

    fn final_state(&self) -> PyState {
        PyState {
            grid: self.grid.clone(),
            inner: self.inner.last().clone(),
        }
    }

    /// None, or the abort reason if the run stopped early.
    #[getter]
    fn aborted(&self) -> Option<String> {
        self.inner.aborted.as_ref().map(|a| a.reason.clone())
    }

    /// Largest deviation of total mass from its initial value.
    fn mass_drift(&self, model: &PyModel) -> f64 {
        mass_drift(&self.inner, &model.inner)
    }

    /// Fitted per-block decay rates of the density perturbation against
    /// the frozen heat rates: list of (level, fitted, reference, ratio).
    fn smoothing_rates(&self, model: &PyModel) -> PyResult<Vec<(i32, f64, f64, f64)>> {
        let cert = smoothing_certificate(&self.inner, &model.inner, Exponent::Finite(2.0))
            .map_err(value_err)?;
        Ok(cert
            .block_rates
            .iter()
            .map(|b| (b.level, b.fitted, b.reference, b.ratio))
            .collect())
    }
}

/// Build the initial state of a named scenario
/// (v0_zero, small_data, large_data, manufactured).
#[pyfunction]
#[pyo3(signature = (model, points, scenario, amplitude, seed=0, length=None))]
fn initial_state(
    model: &PyModel,
    points: usize,
    scenario: &str,
    amplitude: f64,
    seed: u64,
    length: Option<f64>,
) -> PyResult<PyState> {
    let grid = make_grid(
        model.dim,
        points,
        length.unwrap_or(2.0 * std::f64::consts::PI),
    )
    .map_err(value_err)?;
    let spec = ScenarioSpec {
        name: scenario.to_string(),
        amplitude,
        seed,
    };
    let eff = scenario_init(&spec, &grid, &model.inner).map_err(value_err)?;
    Ok(PyState {
        grid,
        inner: to_hybrid(&model.inner, &eff),
    })
}

/// Evolve a state with the semi-implicit scheme.
#[pyfunction]
#[pyo3(signature = (model, state, dt, t_end, record_every=10))]
fn evolve(
    model: &PyModel,
    state: &PyState,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> PyResult<PyTrajectory> {
    let control = StepControl {
        dt,
        t_end,
        record_every,
    };
    let traj = run(&model.inner, state.inner.clone(), &control).map_err(value_err)?;
    Ok(PyTrajectory {
        grid: state.grid.clone(),
        inner: traj,
    })
}

/// Inhomogeneous dyadic Besov norm of flattened row-major samples on a
/// periodic grid.
#[pyfunction]
#[pyo3(signature = (values, dim, points, s, p, r, length=None))]
fn besov(
    values: Vec<f64>,
    dim: usize,
    points: usize,
    s: f64,
    p: f64,
    r: f64,
    length: Option<f64>,
) -> PyResult<f64> {
    let grid = make_grid(dim, points, length.unwrap_or(2.0 * std::f64::consts::PI))
        .map_err(value_err)?;
    let field = ScalarField::from_values(&grid, values).map_err(value_err)?;
    let fam = build_cutoffs(&grid);
    let to_exp = |x: f64| -> PyResult<Exponent> {
        if x.is_infinite() {
            Ok(Exponent::Infinity)
        } else if x >= 1.0 {
            Ok(Exponent::Finite(x))
        } else {
            Err(PyValueError::new_err("integrability exponents must be >= 1"))
        }
    };
    let spec = BesovSpec::new(s, to_exp(p)?, to_exp(r)?);
    Ok(besov_norm(&field, &fam, &spec))
}

/// Empirical constant of one of the block estimates
/// (heat24, tdiff25, tdiff26, transport27) on a fresh grid.
#[pyfunction]
#[pyo3(signature = (kind, points, mu, shear=0.4, dim=2))]
fn certificate(
    kind: &str,
    points: usize,
    mu: f64,
    shear: f64,
    dim: usize,
) -> PyResult<(f64, f64, f64)> {
    let k = match kind {
        "heat24" => CertificateKind::Heat24,
        "tdiff25" => CertificateKind::Tdiff25,
        "tdiff26" => CertificateKind::Tdiff26,
        "transport27" => CertificateKind::Transport27,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown certificate kind `{other}`"
            )))
        }
    };
    let grid = make_grid(dim, points, 2.0 * std::f64::consts::PI).map_err(value_err)?;
    let rep = estimate_certificate(k, &grid, mu, shear).map_err(value_err)?;
    Ok((rep.lhs, rep.driver, rep.empirical_c))
}

#[pymodule]
fn bdflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(initial_state, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(besov, m)?)?;
    m.add_function(wrap_pyfunction!(certificate, m)?)?;
    Ok(())
}
