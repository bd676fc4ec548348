//! Python bindings for casimir-mag.
//!
//! Quantities are SI: separations in m, temperatures in K, free energies in
//! J/m², entropies in J/(K·m²), pressures in Pa.

use ::casimir_mag as core;
use core::diagnostics::{nernst_scan as scan, default_nernst_grid};
use core::lifshitz_numeric::{self as numeric, NumericOptions, Representation};
use core::materials::MuMode;
use core::{Dispersion, MaterialModel, Model, PlateConfiguration, Relaxation};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(casimir_mag, CasimirError, PyException);
create_exception!(casimir_mag, ConfigError, CasimirError);
create_exception!(casimir_mag, ValidityError, CasimirError);
create_exception!(casimir_mag, ConvergenceError, CasimirError);

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::InvalidArgument(m) => PyValueError::new_err(m),
        core::Error::Config(m) => ConfigError::new_err(m),
        core::Error::Validity(m) => ValidityError::new_err(m),
        core::Error::NonConvergence(m) | core::Error::Quadrature(m) => ConvergenceError::new_err(m),
    }
}

fn parse_model(s: &str) -> PyResult<Model> {
    match s {
        "plasma" => Ok(Model::Plasma),
        "drude" => Ok(Model::Drude),
        _ => Err(PyValueError::new_err(format!("model must be 'plasma' or 'drude', got '{s}'"))),
    }
}

fn parse_mu_mode(s: &str) -> PyResult<MuMode> {
    match s {
        "static" => Ok(MuMode::Static),
        "debye" => Ok(MuMode::Debye),
        "static-zero-term-only" => Ok(MuMode::static_zero_term_only()),
        _ => Err(PyValueError::new_err(format!("unknown mu_mode '{s}'"))),
    }
}

/// A plate material.
#[pyclass(name = "Material", module = "casimir_mag", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMaterial {
    inner: MaterialModel,
}

#[pymethods]
impl PyMaterial {
    /// `plasma_wavelength` in m. Give at most one of `gamma0` (rad/(s·K²),
    /// perfect lattice) and `gamma` (rad/s, constant); `omega_m` (rad/s)
    /// switches on Debye dispersion of μ.
    #[new]
    #[pyo3(signature = (name, plasma_wavelength, mu0=1.0, gamma0=None, gamma=None, omega_m=None))]
    fn new(
        name: String,
        plasma_wavelength: f64,
        mu0: f64,
        gamma0: Option<f64>,
        gamma: Option<f64>,
        omega_m: Option<f64>,
    ) -> PyResult<Self> {
        let relaxation = match (gamma0, gamma) {
            (Some(_), Some(_)) => return Err(PyValueError::new_err("give gamma0 or gamma, not both")),
            (Some(gamma0), None) => Relaxation::PerfectLattice { gamma0 },
            (None, Some(gamma)) => Relaxation::Constant { gamma },
            (None, None) => Relaxation::None,
        };
        let dispersion = omega_m.map_or(Dispersion::Constant, |omega_m| Dispersion::Debye { omega_m });
        let inner = MaterialModel::from_plasma_wavelength(name, plasma_wavelength, mu0, relaxation, dispersion).map_err(to_py)?;
        Ok(PyMaterial { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn mu0(&self) -> f64 {
        self.inner.mu0
    }

    #[getter]
    fn plasma_wavelength(&self) -> f64 {
        self.inner.plasma_wavelength()
    }

    fn __repr__(&self) -> String {
        format!("Material('{}', plasma_wavelength={:e}, mu0={})", self.inner.name, self.inner.plasma_wavelength(), self.inner.mu0)
    }
}

fn config(m: &PyMaterial, a: f64, temperature: f64) -> PyResult<PlateConfiguration> {
    PlateConfiguration::similar(m.inner.clone(), a, temperature).map_err(to_py)
}

fn options(tol: f64, mu_mode: &str) -> PyResult<NumericOptions> {
    Ok(NumericOptions::default().with_tol(tol).with_mu_mode(parse_mu_mode(mu_mode)?))
}

/// Materials from a configuration file, keyed by section name.
#[pyfunction]
fn load_materials(py: Python<'_>, path: std::path::PathBuf) -> PyResult<Bound<'_, PyDict>> {
    let out = PyDict::new(py);
    for m in core::materials::load_material_file(&path).map_err(to_py)? {
        out.set_item(m.name.clone(), PyMaterial { inner: m })?;
    }
    Ok(out)
}

/// Free energy per unit area of two similar plates.
#[pyfunction]
#[pyo3(signature = (material, a, temperature, model="plasma", representation="matsubara", mu_mode="static", tol=1e-10))]
fn free_energy(
    py: Python<'_>,
    material: &PyMaterial,
    a: f64,
    temperature: f64,
    model: &str,
    representation: &str,
    mu_mode: &str,
    tol: f64,
) -> PyResult<f64> {
    let cfg = config(material, a, temperature)?;
    let (model, opts) = (parse_model(model)?, options(tol, mu_mode)?);
    let repr = match representation {
        "matsubara" => Representation::Matsubara,
        "abel-plana" => Representation::AbelPlana,
        "drude-split" => Representation::DrudeSplit,
        _ => return Err(PyValueError::new_err(format!("unknown representation '{representation}'"))),
    };
    py.detach(|| numeric::free_energy(&cfg, model, repr, &opts)).map(|r| r.total).map_err(to_py)
}

/// Entropy per unit area by Richardson-extrapolated central differences.
/// Returns (entropy, error estimate).
#[pyfunction]
#[pyo3(signature = (material, a, temperature, model="plasma", mu_mode="static", tol=1e-10))]
fn entropy(py: Python<'_>, material: &PyMaterial, a: f64, temperature: f64, model: &str, mu_mode: &str, tol: f64) -> PyResult<(f64, f64)> {
    let cfg = config(material, a, temperature)?;
    let (model, opts) = (parse_model(model)?, options(tol, mu_mode)?);
    py.detach(|| numeric::entropy_fd(&cfg, model, None, &opts)).map(|r| (r.s, r.error_estimate)).map_err(to_py)
}

/// Pressure, Pa. Returns (total, thermal part).
#[pyfunction]
#[pyo3(signature = (material, a, temperature, model="plasma", mu_mode="static", tol=1e-10))]
fn pressure(py: Python<'_>, material: &PyMaterial, a: f64, temperature: f64, model: &str, mu_mode: &str, tol: f64) -> PyResult<(f64, f64)> {
    let cfg = config(material, a, temperature)?;
    let (model, opts) = (parse_model(model)?, options(tol, mu_mode)?);
    py.detach(|| numeric::pressure_fd(&cfg, model, None, &opts)).map(|r| (r.total, r.thermal)).map_err(to_py)
}

/// Numeric thermal correction Δ_T F, J/m². Returns (value, error estimate).
#[pyfunction]
#[pyo3(signature = (material, a, temperature, model="plasma", mu_mode="static", tol=1e-10))]
fn thermal_correction(
    py: Python<'_>,
    material: &PyMaterial,
    a: f64,
    temperature: f64,
    model: &str,
    mu_mode: &str,
    tol: f64,
) -> PyResult<(f64, f64)> {
    let cfg = config(material, a, temperature)?;
    let (model, opts) = (parse_model(model)?, options(tol, mu_mode)?);
    py.detach(|| numeric::thermal_correction(&cfg, model, &opts)).map_err(to_py)
}

/// Small-Λ series for the plasma-model thermal correction, J/m².
#[pyfunction]
fn thermal_correction_series(material: &PyMaterial, a: f64, temperature: f64) -> PyResult<f64> {
    let cfg = config(material, a, temperature)?;
    let lambda = cfg.state().map_err(to_py)?.lambda;
    core::perturbation_plasma::thermal_correction_series(&cfg, lambda, core::perturbation_plasma::DEFAULT_L_MAX)
        .map(|r| r.value)
        .map_err(to_py)
}

/// Drude-model entropy at T = 0, J/(K·m²): the small-Λ closed form, or the
/// exact zero-frequency integrals with `exact=True`.
#[pyfunction]
#[pyo3(signature = (material, a, exact=false))]
fn entropy_at_zero_t(material: &PyMaterial, a: f64, exact: bool) -> PyResult<f64> {
    let cfg = config(material, a, 1.0)?;
    let r = if exact {
        core::perturbation_drude::entropy_at_zero_t_exact(&cfg)
    } else {
        cfg.state().and_then(|s| core::perturbation_drude::entropy_at_zero_t(&cfg, s.lambda))
    };
    r.map_err(to_py)
}

/// Separation above which the T = 0 Drude entropy turns negative, m.
#[pyfunction]
fn positivity_threshold(material: &PyMaterial) -> PyResult<f64> {
    core::perturbation_drude::positivity_threshold(&material.inner).map_err(to_py)
}

/// Entropy scan towards T = 0 on the default grid, as a dict.
#[pyfunction]
#[pyo3(signature = (material, a, model="drude", tol=1e-10))]
fn nernst_scan<'py>(py: Python<'py>, material: &PyMaterial, a: f64, model: &str, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(material, a, 1.0)?;
    let (model, opts) = (parse_model(model)?, options(tol, "static")?);
    let report = py.detach(|| scan(&cfg, model, &default_nernst_grid(&cfg), &opts)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("temperatures", report.t_grid)?;
    out.set_item("entropies", report.s_values)?;
    out.set_item("extrapolated_s0", report.extrapolated_s0)?;
    out.set_item("extrapolation_error", report.extrapolation_error)?;
    out.set_item("classification", report.classification.to_string())?;
    out.set_item("predicted_s0", report.predicted_s0)?;
    out.set_item("predicted_s0_exact", report.predicted_s0_exact)?;
    Ok(out)
}

#[pyfunction]
fn polylog(n: i32, z: f64) -> PyResult<f64> {
    core::special_functions::polylog(n, z).map_err(to_py)
}

#[pyfunction]
fn zeta(n: i32) -> PyResult<f64> {
    core::special_functions::zeta(n).map_err(to_py)
}

#[pymodule]
fn casimir_mag(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyMaterial>()?;
    m.add("CasimirError", py.get_type::<CasimirError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("ValidityError", py.get_type::<ValidityError>())?;
    m.add("ConvergenceError", py.get_type::<ConvergenceError>())?;
    m.add_function(wrap_pyfunction!(load_materials, m)?)?;
    m.add_function(wrap_pyfunction!(free_energy, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(pressure, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_correction, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_correction_series, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_at_zero_t, m)?)?;
    m.add_function(wrap_pyfunction!(positivity_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(nernst_scan, m)?)?;
    m.add_function(wrap_pyfunction!(polylog, m)?)?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
