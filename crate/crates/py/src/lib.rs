//! Python bindings: copula evaluation, calibration, analytical VaR, sampling
//! and Monte Carlo studies.
//!
//! Errors map to `ValueError` (invalid input), `ArithmeticError` (quadrature
//! or root finding did not converge) and `RuntimeError` (empty level sets).

use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use archvar::calibration::{joe_calibration_check, tau_of};
use archvar::mc::{self, McConfig};
use archvar::sampler;
use archvar::var::{self, QuantileFn};
use archvar::{CopulaSpec, ErrorKind, FamilyId, QuadConfig, Seed};

const DEFAULT_SEED: u64 = 20_240_601;

fn to_py(err: archvar::Error) -> PyErr {
    let msg = err.to_string();
    match err.kind() {
        ErrorKind::Invalid => PyValueError::new_err(msg),
        ErrorKind::Numerical => PyArithmeticError::new_err(msg),
        ErrorKind::Statistical => PyRuntimeError::new_err(msg),
    }
}

fn family(name: &str) -> PyResult<FamilyId> {
    name.parse().map_err(to_py)
}

/// `None` gives uniform margins; otherwise one list of `(u, quantile)` knots
/// per component.
fn margins(dim: usize, knots: Option<Vec<Vec<(f64, f64)>>>) -> PyResult<Vec<QuantileFn>> {
    match knots {
        None => Ok(var::uniform_margins(dim)),
        Some(tables) => tables
            .into_iter()
            .map(|t| QuantileFn::tabulated(t).map_err(to_py))
            .collect(),
    }
}

/// An Archimedean copula: family, parameter and dimension.
#[pyclass(name = "Copula", module = "archvar_py", frozen)]
struct PyCopula {
    spec: CopulaSpec,
}

#[pymethods]
impl PyCopula {
    #[new]
    #[pyo3(signature = (family, theta, dim = 2))]
    fn new(family: &str, theta: f64, dim: usize) -> PyResult<Self> {
        let spec = CopulaSpec::new(self::family(family)?, theta, dim).map_err(to_py)?;
        Ok(PyCopula { spec })
    }

    /// Build from a target Kendall's tau.
    #[staticmethod]
    #[pyo3(signature = (family, tau, dim = 2))]
    fn from_tau(family: &str, tau: f64, dim: usize) -> PyResult<Self> {
        let f = self::family(family)?;
        let theta = archvar::theta_from_tau(f, tau).map_err(to_py)?;
        Self::new(family, theta, dim)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.spec.family().key()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.spec.theta()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn phi(&self, t: f64) -> PyResult<f64> {
        self.spec.phi(t).map_err(to_py)
    }

    fn phi_prime(&self, t: f64) -> PyResult<f64> {
        self.spec.phi_prime(t).map_err(to_py)
    }

    fn phi_inverse(&self, s: f64) -> PyResult<f64> {
        self.spec.phi_inverse(s).map_err(to_py)
    }

    fn cdf(&self, u: Vec<f64>) -> PyResult<f64> {
        self.spec.copula_cdf(&u).map_err(to_py)
    }

    fn beta_kernel(&self, u: f64, alpha: f64) -> PyResult<f64> {
        self.spec.beta_kernel(u, alpha).map_err(to_py)
    }

    fn kendall_tau(&self) -> PyResult<f64> {
        archvar::kendall_tau(&self.spec).map_err(to_py)
    }

    /// VaR components by the family's closed form.
    #[pyo3(signature = (alpha = 0.05, margins = None))]
    fn var(&self, alpha: f64, margins: Option<Vec<Vec<(f64, f64)>>>) -> PyResult<Vec<f64>> {
        let m = self::margins(self.spec.dim(), margins)?;
        let r = var::var_closed_form(&self.spec, &m, alpha, &QuadConfig::default()).map_err(to_py)?;
        Ok(r.components)
    }

    /// VaR components by the generic level-set integral.
    #[pyo3(signature = (alpha = 0.05, margins = None))]
    fn var_generic(&self, alpha: f64, margins: Option<Vec<Vec<(f64, f64)>>>) -> PyResult<Vec<f64>> {
        let m = self::margins(self.spec.dim(), margins)?;
        let r = var::var_generic(&self.spec, &m, alpha, &QuadConfig::default()).map_err(to_py)?;
        Ok(r.components)
    }

    fn kernel_mass(&self, alpha: f64) -> PyResult<f64> {
        var::kernel_mass(&self.spec, alpha, &QuadConfig::default()).map_err(to_py)
    }

    #[pyo3(signature = (n, seed = DEFAULT_SEED, stream_id = 0))]
    fn sample(&self, n: usize, seed: u64, stream_id: u64) -> PyResult<PySample> {
        let s = sampler::sample_copula(&self.spec, n, Seed::new(seed, stream_id)).map_err(to_py)?;
        Ok(PySample { inner: s })
    }

    fn __repr__(&self) -> String {
        format!(
            "Copula(family='{}', theta={}, dim={})",
            self.spec.family().key(),
            self.spec.theta(),
            self.spec.dim()
        )
    }
}

/// Seeded copula observations, `rows x dim`.
#[pyclass(name = "Sample", module = "archvar_py", frozen)]
struct PySample {
    inner: sampler::Sample,
}

#[pymethods]
impl PySample {
    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn column(&self, j: usize) -> PyResult<Vec<f64>> {
        if j >= self.inner.dim() {
            return Err(PyValueError::new_err(format!("column {j} out of range")));
        }
        Ok(self.inner.column(j))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.inner.iter_rows().map(<[f64]>::to_vec).collect()
    }

    fn kendall_tau(&self, i: usize, j: usize) -> PyResult<f64> {
        sampler::empirical_kendall_tau(&self.inner, (i, j)).map_err(to_py)
    }

    fn empirical_copula(&self, u: Vec<f64>) -> PyResult<f64> {
        sampler::empirical_copula(&self.inner, &u).map_err(to_py)
    }

    /// Level-set estimate and the number of selected rows.
    #[pyo3(signature = (alpha = 0.05, h = 1e-4))]
    fn estimate_var(&self, alpha: f64, h: f64) -> PyResult<(Vec<f64>, usize)> {
        let spec = *self.inner.spec();
        mc::estimate_var_once(&self.inner, &spec, alpha, h, &var::uniform_margins(spec.dim()))
            .map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.rows()
    }
}

#[pyfunction]
fn theta_from_tau(family: &str, tau: f64) -> PyResult<f64> {
    archvar::theta_from_tau(self::family(family)?, tau).map_err(to_py)
}

#[pyfunction]
fn kendall_tau(family: &str, theta: f64) -> PyResult<f64> {
    tau_of(self::family(family)?, theta).map_err(to_py)
}

#[pyfunction]
fn var_clayton_uniform(theta: f64, dim: usize, alpha: f64) -> PyResult<f64> {
    var::var_clayton_uniform(theta, dim, alpha, &QuadConfig::default()).map_err(to_py)
}

/// Replication study; returns a dict of per-component statistics.
#[pyfunction]
#[pyo3(signature = (copula, n, replications, h = 1e-4, alpha = 0.05, seed = DEFAULT_SEED))]
fn run_study<'py>(
    py: Python<'py>,
    copula: &PyCopula,
    n: usize,
    replications: usize,
    h: f64,
    alpha: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = McConfig::new(copula.spec, n, replications, h, alpha, Seed::new(seed, 0));
    let stats = py.detach(|| mc::run_study(&cfg)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("mean", stats.mean)?;
    d.set_item("std_dev", stats.std_dev)?;
    d.set_item("std_error", stats.std_error)?;
    d.set_item("bias", stats.bias)?;
    d.set_item("rmse", stats.rmse)?;
    d.set_item("theoretical", stats.theoretical)?;
    d.set_item("mean_selected_count", stats.mean_selected_count)?;
    d.set_item("failed_replications", stats.failed_replications)?;
    Ok(d)
}

/// Kendall's tau at the printed Joe parameter against the calibrated one.
#[pyfunction]
fn joe_check(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let c = joe_calibration_check().map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("printed_theta", c.printed_theta)?;
    d.set_item("tau_at_printed_theta", c.tau_at_printed_theta)?;
    d.set_item("target_tau", c.target_tau)?;
    d.set_item("calibrated_theta", c.calibrated_theta)?;
    d.set_item("consistent", c.consistent)?;
    Ok(d)
}

#[pymodule]
pub fn archvar_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCopula>()?;
    m.add_class::<PySample>()?;
    m.add_function(wrap_pyfunction!(theta_from_tau, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(var_clayton_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(joe_check, m)?)?;
    m.add("FAMILIES", FamilyId::ALL.map(FamilyId::key).to_vec())?;
    Ok(())
}
