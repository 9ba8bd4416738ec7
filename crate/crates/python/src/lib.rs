//! Python bindings for the chain, mode, critical-point, fitting, oracle and
//! trap-model operations of `ion-zigzag`.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ion_zigzag::{critical, equilibrium, measurements, modes, oracle, power_law, trap, ZigzagError};

fn to_py(err: ZigzagError) -> PyErr {
    match err {
        ZigzagError::Convergence { .. } | ZigzagError::Numeric(_) => PyRuntimeError::new_err(err.to_string()),
        ZigzagError::Io(_) => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

#[pyclass(name = "ChainEquilibrium", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyChainEquilibrium {
    pub n_ions: usize,
    pub positions: Vec<f64>,
    pub residual_norm: f64,
}

#[pymethods]
impl PyChainEquilibrium {
    fn __repr__(&self) -> String {
        format!("ChainEquilibrium(n_ions={}, residual_norm={:e})", self.n_ions, self.residual_norm)
    }
}

#[pyclass(name = "ModeSpectrum", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyModeSpectrum {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[p]` belongs to `eigenvalues[p]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

#[pymethods]
impl PyModeSpectrum {
    fn radial_eigenvalues(&self, alpha: f64) -> PyResult<Vec<f64>> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(PyValueError::new_err(format!("invalid alpha: must be positive, got {alpha}")));
        }
        Ok(self.eigenvalues.iter().map(|mu| 1.0 / alpha + 0.5 - 0.5 * mu).collect())
    }
}

#[pyclass(name = "CriticalPoint", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCriticalPoint {
    pub n_ions: usize,
    pub alpha_crit: f64,
    pub mu_max: f64,
}

#[pymethods]
impl PyCriticalPoint {
    fn slope(&self) -> f64 {
        self.alpha_crit.sqrt().recip()
    }

    fn __repr__(&self) -> String {
        format!("CriticalPoint(n_ions={}, alpha_crit={})", self.n_ions, self.alpha_crit)
    }
}

impl From<critical::CriticalPoint> for PyCriticalPoint {
    fn from(p: critical::CriticalPoint) -> Self {
        PyCriticalPoint {
            n_ions: p.n_ions,
            alpha_crit: p.alpha_crit,
            mu_max: p.mu_max,
        }
    }
}

#[pyclass(name = "PowerLawFit", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPowerLawFit {
    inner: power_law::PowerLawFit,
}

#[pymethods]
impl PyPowerLawFit {
    #[new]
    #[pyo3(signature = (c, beta, c_stderr=None, beta_stderr=None))]
    fn new(c: f64, beta: f64, c_stderr: Option<f64>, beta_stderr: Option<f64>) -> Self {
        PyPowerLawFit {
            inner: power_law::PowerLawFit {
                c,
                beta,
                c_stderr,
                beta_stderr,
                n_range: (0, 0),
                n_points: 0,
            },
        }
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn c_stderr(&self) -> Option<f64> {
        self.inner.c_stderr
    }

    #[getter]
    fn beta_stderr(&self) -> Option<f64> {
        self.inner.beta_stderr
    }

    #[getter]
    fn n_range(&self) -> (usize, usize) {
        self.inner.n_range
    }

    #[getter]
    fn n_points(&self) -> usize {
        self.inner.n_points
    }

    fn evaluate(&self, n_ions: f64) -> f64 {
        self.inner.evaluate(n_ions)
    }

    fn __repr__(&self) -> String {
        format!("PowerLawFit(c={}, beta={})", self.inner.c, self.inner.beta)
    }
}

#[pyclass(name = "CrystalConfiguration", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCrystalConfiguration {
    pub n_ions: usize,
    pub coordinates: Vec<[f64; 3]>,
    pub alpha: f64,
    pub energy: f64,
    pub gradient_norm: f64,
    pub max_transverse: f64,
}

#[pymethods]
impl PyCrystalConfiguration {
    /// "linear" or "zigzag".
    #[pyo3(signature = (threshold=oracle::DEFAULT_THRESHOLD))]
    fn phase(&self, threshold: f64) -> &'static str {
        if self.max_transverse > threshold {
            "zigzag"
        } else {
            "linear"
        }
    }
}

#[pyfunction]
fn solve_equilibrium(n_ions: usize) -> PyResult<PyChainEquilibrium> {
    let eq = equilibrium::solve_equilibrium(n_ions).map_err(to_py)?;
    Ok(PyChainEquilibrium {
        n_ions: eq.n_ions,
        positions: eq.positions,
        residual_norm: eq.residual_norm,
    })
}

#[pyfunction]
fn dimensionless_potential(positions: Vec<f64>) -> PyResult<f64> {
    equilibrium::dimensionless_potential(&positions).map_err(to_py)
}

#[pyfunction]
fn potential_gradient(positions: Vec<f64>) -> PyResult<Vec<f64>> {
    equilibrium::potential_gradient(&positions).map_err(to_py)
}

/// Axial coupling matrix of the N-ion chain as a list of rows.
#[pyfunction]
fn coupling_matrix_axial(n_ions: usize) -> PyResult<Vec<Vec<f64>>> {
    let eq = equilibrium::solve_equilibrium(n_ions).map_err(to_py)?;
    let a = modes::coupling_matrix_axial(&eq);
    Ok(a.entries.row_iter().map(|r| r.iter().copied().collect()).collect())
}

#[pyfunction]
fn axial_spectrum(n_ions: usize) -> PyResult<PyModeSpectrum> {
    let eq = equilibrium::solve_equilibrium(n_ions).map_err(to_py)?;
    let table = modes::axial_spectrum(&modes::coupling_matrix_axial(&eq)).map_err(to_py)?.to_table();
    Ok(PyModeSpectrum {
        eigenvalues: table.eigenvalues,
        eigenvectors: table.eigenvectors,
    })
}

#[pyfunction]
fn alpha_crit(n_ions: usize) -> PyResult<PyCriticalPoint> {
    critical::alpha_crit(n_ions).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn critical_curve(n_min: usize, n_max: usize) -> PyResult<Vec<PyCriticalPoint>> {
    let curve = critical::critical_curve(n_min, n_max).map_err(to_py)?;
    Ok(curve.points.into_iter().map(Into::into).collect())
}

#[pyfunction]
fn critical_slope(n_ions: usize) -> PyResult<f64> {
    critical::critical_slope(n_ions).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (points, weights=None))]
fn fit_power_law(points: Vec<(usize, f64)>, weights: Option<Vec<f64>>) -> PyResult<PyPowerLawFit> {
    let inner = power_law::fit_power_law(&points, weights.as_deref()).map_err(to_py)?;
    Ok(PyPowerLawFit { inner })
}

/// Fit of the exact critical curve over `n_min..=n_max`.
#[pyfunction]
fn fit_theory(n_min: usize, n_max: usize) -> PyResult<PyPowerLawFit> {
    let curve = critical::critical_curve(n_min, n_max).map_err(to_py)?;
    let inner = power_law::fit_power_law(&curve.pairs(), None).map_err(to_py)?;
    Ok(PyPowerLawFit { inner })
}

#[pyfunction]
#[pyo3(signature = (n_ions, alpha, perturbation_scale=oracle::DEFAULT_PERTURBATION))]
fn minimize_full(n_ions: usize, alpha: f64, perturbation_scale: f64) -> PyResult<PyCrystalConfiguration> {
    let c = oracle::minimize_full(n_ions, alpha, perturbation_scale).map_err(to_py)?;
    Ok(PyCrystalConfiguration {
        max_transverse: c.max_transverse(),
        n_ions: c.n_ions,
        coordinates: c.coordinates,
        alpha: c.alpha,
        energy: c.energy,
        gradient_norm: c.gradient_norm,
    })
}

/// Bisect for the transition; the bracket defaults to half and twice the
/// wide-range power law.
#[pyfunction]
#[pyo3(signature = (n_ions, bracket_lo=None, bracket_hi=None, tol=oracle::DEFAULT_TOLERANCE))]
fn bisect_transition(n_ions: usize, bracket_lo: Option<f64>, bracket_hi: Option<f64>, tol: f64) -> PyResult<f64> {
    let (lo, hi) = oracle::default_bracket(n_ions);
    oracle::bisect_transition(n_ions, bracket_lo.unwrap_or(lo), bracket_hi.unwrap_or(hi), tol).map_err(to_py)
}

#[pyfunction]
fn anisotropy(nu_z: f64, nu_r: f64) -> f64 {
    (nu_z / nu_r).powi(2)
}

#[pyfunction]
fn length_scale(mass: f64, charge: f64, nu_z: f64) -> PyResult<f64> {
    trap::length_scale(mass, charge, nu_z).map_err(to_py)
}

/// Longest linear chain for ⁴⁰Ca⁺ at the given frequencies.
#[pyfunction]
fn n_crit(nu_z: f64, nu_r: f64, fit: &PyPowerLawFit) -> PyResult<f64> {
    let params = trap::TrapParameters::ca40(nu_z, nu_r).map_err(to_py)?;
    trap::n_crit(&params, &fit.inner).map_err(to_py)
}

/// Analysis of a measurement CSV, returned as a JSON document.
#[pyfunction]
fn analyze_csv(text: &str) -> PyResult<String> {
    let records = measurements::load_measurements(text.as_bytes()).map_err(to_py)?;
    let report = measurements::analyze(&records).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn pyzigzag(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChainEquilibrium>()?;
    m.add_class::<PyModeSpectrum>()?;
    m.add_class::<PyCriticalPoint>()?;
    m.add_class::<PyPowerLawFit>()?;
    m.add_class::<PyCrystalConfiguration>()?;
    m.add_function(wrap_pyfunction!(solve_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(dimensionless_potential, m)?)?;
    m.add_function(wrap_pyfunction!(potential_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_matrix_axial, m)?)?;
    m.add_function(wrap_pyfunction!(axial_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_crit, m)?)?;
    m.add_function(wrap_pyfunction!(critical_curve, m)?)?;
    m.add_function(wrap_pyfunction!(critical_slope, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(fit_theory, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_full, m)?)?;
    m.add_function(wrap_pyfunction!(bisect_transition, m)?)?;
    m.add_function(wrap_pyfunction!(anisotropy, m)?)?;
    m.add_function(wrap_pyfunction!(length_scale, m)?)?;
    m.add_function(wrap_pyfunction!(n_crit, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_csv, m)?)?;
    m.add("SCHIFFER", PyPowerLawFit { inner: power_law::SCHIFFER })?;
    m.add("THEORY_3_10", PyPowerLawFit { inner: power_law::THEORY_3_10 })?;
    m.add("THEORY_2_100", PyPowerLawFit { inner: power_law::THEORY_2_100 })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrappers_match_core() {
        let p = alpha_crit(3).unwrap();
        assert!((p.alpha_crit - 5.0 / 12.0).abs() < 1e-10);
        assert!((p.slope() - (12.0f64 / 5.0).sqrt()).abs() < 1e-10);
        let s = axial_spectrum(2).unwrap();
        assert!((s.eigenvalues[1] - 3.0).abs() < 1e-12);
        assert!(s.radial_eigenvalues(1.0).unwrap()[1].abs() < 1e-12);
        let fit = fit_theory(3, 10).unwrap();
        assert!((fit.c() - 2.94).abs() < 0.07);
        assert_eq!(anisotropy(1.0, 2.0), 0.25);
    }

    #[test]
    fn errors_become_python_exceptions() {
        Python::attach(|py| {
            let err = alpha_crit(1).err().unwrap();
            assert!(err.is_instance_of::<PyValueError>(py));
            let err = dimensionless_potential(vec![1.0, 1.0]).err().unwrap();
            assert!(err.is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn module_exposes_functions() {
        Python::attach(|py| {
            let module = PyModule::new(py, "pyzigzag").unwrap();
            pyzigzag(&module).unwrap();
            let point = module.getattr("alpha_crit").unwrap().call1((2,)).unwrap();
            let alpha: f64 = point.getattr("alpha_crit").unwrap().extract().unwrap();
            assert!((alpha - 1.0).abs() < 1e-10);
            let fit = module.getattr("THEORY_2_100").unwrap();
            let c: f64 = fit.getattr("c").unwrap().extract().unwrap();
            assert_eq!(c, 2.88);
        });
    }
}
