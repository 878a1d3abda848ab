use evstab::classifier::{self, EffortLevel};
use evstab::curves::{curve_point_search, ALL_CURVES};
use evstab::latticever::{check, stab_verify_all, StabOptions};
use evstab::modsieve::{self, Target};
use evstab::{bigratseq, orbitdensity, stabbounds, Error, Integer, Rational};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(evstab, BudgetError, PyException, "A computation ran out of its configured budget.");

fn err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        Error::Budget { .. } | Error::FactorizationBudget(_) | Error::Precision(_) | Error::NonTermination(_) => {
            BudgetError::new_err(e.to_string())
        }
        Error::Inconsistent(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

// Python ints cross the boundary as decimal strings.
fn big(obj: &Bound<'_, PyAny>) -> PyResult<Integer> {
    if !obj.is_instance_of::<pyo3::types::PyInt>() {
        return Err(PyValueError::new_err("expected an int"));
    }
    Integer::from_str_radix(&obj.str()?.to_cow()?, 10).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rat(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let s = obj.str()?.to_cow()?.into_owned();
    s.trim().parse::<Rational>().map_err(|e| PyValueError::new_err(format!("{s}: {e}")))
}

fn to_py<'py>(py: Python<'py>, x: &Integer) -> PyResult<Bound<'py, PyAny>> {
    py.import("builtins")?.getattr("int")?.call1((x.to_string(),))
}

fn to_obj<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.getattr("loads")?.call1((s,))
}

#[pyclass(name = "Effort", module = "evstab", from_py_object)]
#[derive(Clone)]
struct PyEffort(classifier::Effort);

#[pymethods]
impl PyEffort {
    #[new]
    #[pyo3(signature = (level = "full", horizon = None, p_max = None, lattice_x = None, assume_a5_nonsquare = false, curve_height = None))]
    fn new(
        level: &str,
        horizon: Option<u32>,
        p_max: Option<Vec<u64>>,
        lattice_x: Option<&Bound<'_, PyAny>>,
        assume_a5_nonsquare: bool,
        curve_height: Option<u64>,
    ) -> PyResult<Self> {
        let mut e = match level {
            "fast" => classifier::Effort::fast(),
            "full" => classifier::Effort::full(),
            _ => return Err(PyValueError::new_err(format!("unknown effort level {level:?}"))),
        };
        if let Some(h) = horizon {
            e.horizon = h;
        }
        if let Some(p) = p_max {
            e.p_max = p;
        }
        e.lattice_x = lattice_x.map(big).transpose()?;
        e.assume_a5_nonsquare = assume_a5_nonsquare;
        if let Some(h) = curve_height {
            e.curve_height = h;
        }
        Ok(PyEffort(e))
    }

    #[getter]
    fn level(&self) -> &'static str {
        match self.0.level {
            EffortLevel::Fast => "fast",
            EffortLevel::Full => "full",
        }
    }

    #[getter]
    fn horizon(&self) -> u32 {
        self.0.horizon
    }

    #[getter]
    fn p_max(&self) -> Vec<u64> {
        self.0.p_max.clone()
    }

    fn __repr__(&self) -> String {
        format!("Effort(level={:?}, horizon={}, p_max={:?})", self.level(), self.0.horizon, self.0.p_max)
    }
}

#[pyclass(name = "VerificationReport", module = "evstab", frozen)]
struct PyReport(classifier::VerificationReport);

#[pymethods]
impl PyReport {
    #[getter]
    fn c<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.verdict.c)
    }

    #[getter]
    fn case(&self) -> u8 {
        self.0.verdict.case
    }

    #[getter]
    fn status(&self) -> String {
        self.0.status.to_string()
    }

    #[getter]
    fn verified(&self) -> bool {
        self.0.is_verified()
    }

    #[getter]
    fn k_profile<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_obj(py, &self.0.k_profile)
    }

    /// Re-run every stored certificate without trusting the search that found it.
    fn recheck(&self) -> PyResult<()> {
        classifier::recheck(&self.0).map_err(PyRuntimeError::new_err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_obj(py, &self.0)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        serde_json::from_str(s).map(PyReport).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("VerificationReport(c={}, case={}, status={})", self.0.verdict.c, self.0.verdict.case, self.0.status)
    }
}

#[pyclass(name = "Verifier", module = "evstab", frozen)]
struct PyVerifier(classifier::Verifier);

#[pymethods]
impl PyVerifier {
    #[new]
    #[pyo3(signature = (effort = None))]
    fn new(effort: Option<PyEffort>) -> Self {
        PyVerifier(classifier::Verifier::new(effort.map(|e| e.0).unwrap_or_default()))
    }

    fn verify(&self, py: Python<'_>, c: &Bound<'_, PyAny>) -> PyResult<PyReport> {
        let c = big(c)?;
        py.detach(|| self.0.verify(&c)).map(PyReport).map_err(err)
    }
}

#[pyclass(name = "DensityProfile", module = "evstab", frozen)]
struct PyDensity(orbitdensity::DensityProfile);

#[pymethods]
impl PyDensity {
    #[getter]
    fn hypothesis_met(&self) -> bool {
        self.0.hypothesis_met
    }

    #[getter]
    fn banner(&self) -> Option<String> {
        self.0.banner.clone()
    }

    #[getter]
    fn excluded(&self) -> Vec<u64> {
        self.0.excluded.clone()
    }

    #[getter]
    fn violations(&self) -> Vec<u64> {
        self.0.violations.clone()
    }

    /// `(bound, dividing, primes, fraction)` per checkpoint.
    #[getter]
    fn checkpoints(&self) -> Vec<(u64, u64, u64, f64)> {
        self.0.checkpoints.iter().map(|k| (k.bound, k.dividing, k.primes, k.fraction)).collect()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_obj(py, &self.0)
    }
}

#[pyfunction]
fn a_n<'py>(py: Python<'py>, c: &Bound<'py, PyAny>, n: u32) -> PyResult<Bound<'py, PyAny>> {
    let a = bigratseq::compute_a(&big(c)?, n).map_err(err)?;
    to_py(py, &a.value)
}

#[pyfunction]
fn a_sequence<'py>(py: Python<'py>, c: &Bound<'py, PyAny>, n: u32) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let xs = bigratseq::a_sequence(&big(c)?, n).map_err(err)?;
    xs.iter().map(|x| to_py(py, x)).collect()
}

/// `f^n(0)` as a `fractions.Fraction`.
#[pyfunction]
fn orbit_point<'py>(py: Python<'py>, c: &Bound<'py, PyAny>, n: u32) -> PyResult<Bound<'py, PyAny>> {
    let pt = bigratseq::orbit_point(&big(c)?, n).map_err(err)?;
    let (num, den) = (to_py(py, pt.value.numer())?, to_py(py, pt.value.denom())?);
    py.import("fractions")?.getattr("Fraction")?.call1((num, den))
}

#[pyfunction]
fn detect_case<'py>(py: Python<'py>, c: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    to_obj(py, &classifier::detect_case(&big(c)?).map_err(err)?)
}

#[pyfunction]
fn predicted_k_profile<'py>(py: Python<'py>, c: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let v = classifier::detect_case(&big(c)?).map_err(err)?;
    to_obj(py, &classifier::predicted_k_profile(&v))
}

#[pyfunction]
#[pyo3(signature = (c, effort = None))]
fn verify(py: Python<'_>, c: &Bound<'_, PyAny>, effort: Option<PyEffort>) -> PyResult<PyReport> {
    let c = big(c)?;
    let effort = effort.map(|e| e.0).unwrap_or_default();
    py.detach(|| classifier::verify(&c, &effort)).map(PyReport).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (lo, hi, effort = None))]
fn verify_range(py: Python<'_>, lo: i64, hi: i64, effort: Option<PyEffort>) -> PyResult<Vec<PyReport>> {
    let effort = effort.map(|e| e.0).unwrap_or_default();
    let reports = py.detach(|| classifier::verify_range(lo, hi, &effort)).map_err(err)?;
    Ok(reports.into_iter().map(PyReport).collect())
}

/// Sieve certificate for `a_n(c)` at one prime, or `None`.
#[pyfunction]
fn certify_at_prime<'py>(py: Python<'py>, c: &Bound<'py, PyAny>, p: u64) -> PyResult<Bound<'py, PyAny>> {
    match modsieve::certify_at_prime(&big(c)?, &Target::Numerator, p) {
        Some(cert) => to_obj(py, &cert),
        None => Ok(py.None().into_bound(py)),
    }
}

/// Non-square certificates for every prime index up to the cap for `|c| <= x`.
/// With `check`, each lattice certificate is re-verified independently.
#[pyfunction]
#[pyo3(signature = (x, check = false, assume_a5_nonsquare = false))]
fn stab_verify<'py>(
    py: Python<'py>,
    x: &Bound<'py, PyAny>,
    check: bool,
    assume_a5_nonsquare: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let x = big(x)?;
    let agg = py
        .detach(|| {
            let agg = stab_verify_all(&x, StabOptions { assume_a5_nonsquare })?;
            if check {
                for cert in agg.lattice_certificates() {
                    check::check_certificate(cert)
                        .map_err(|e| Error::Inconsistent(format!("p = {}: {e}", cert.n)))?;
                }
            }
            Ok(agg)
        })
        .map_err(err)?;
    to_obj(py, &agg)
}

#[pyfunction]
#[pyo3(signature = (curve, height = 10_000))]
fn curve_points<'py>(py: Python<'py>, curve: &str, height: u64) -> PyResult<Bound<'py, PyAny>> {
    let id = ALL_CURVES
        .into_iter()
        .find(|id| id.as_str().eq_ignore_ascii_case(curve))
        .ok_or_else(|| PyValueError::new_err(format!("unknown curve {curve:?}")))?;
    to_obj(py, &curve_point_search(id, height))
}

#[pyfunction]
#[pyo3(signature = (c, bound, t = None, checkpoints = None))]
fn density_profile(
    py: Python<'_>,
    c: &Bound<'_, PyAny>,
    bound: u64,
    t: Option<&Bound<'_, PyAny>>,
    checkpoints: Option<Vec<u64>>,
) -> PyResult<PyDensity> {
    let c = big(c)?;
    let t = t.map(rat).transpose()?.unwrap_or_default();
    let cps = checkpoints.unwrap_or_default();
    py.detach(|| orbitdensity::density_profile(&c, &t, bound, &cps)).map(PyDensity).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, c, t = None))]
fn divides_orbit(p: u64, c: &Bound<'_, PyAny>, t: Option<&Bound<'_, PyAny>>) -> PyResult<bool> {
    let t = t.map(rat).transpose()?.unwrap_or_default();
    orbitdensity::divides_orbit(p, &big(c)?, &t).map_err(err)
}

/// The congruence table as text; regenerated from scratch when `regen` is set.
#[pyfunction]
#[pyo3(signature = (regen = false, bound = 100))]
fn table1(regen: bool, bound: u64) -> String {
    if regen {
        modsieve::regen_table1(bound).to_text()
    } else {
        modsieve::static_table1().to_text()
    }
}

#[pyfunction]
#[pyo3(signature = (c, bits = 128))]
fn bounds<'py>(py: Python<'py>, c: &Bound<'py, PyAny>, bits: u32) -> PyResult<Bound<'py, PyAny>> {
    to_obj(py, &stabbounds::profile(&big(c)?, bits).map_err(err)?)
}

#[pymodule]
#[pyo3(name = "evstab")]
fn evstab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_class::<PyEffort>()?;
    m.add_class::<PyVerifier>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyDensity>()?;
    m.add_function(wrap_pyfunction!(a_n, m)?)?;
    m.add_function(wrap_pyfunction!(a_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_point, m)?)?;
    m.add_function(wrap_pyfunction!(detect_case, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_k_profile, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_range, m)?)?;
    m.add_function(wrap_pyfunction!(certify_at_prime, m)?)?;
    m.add_function(wrap_pyfunction!(stab_verify, m)?)?;
    m.add_function(wrap_pyfunction!(curve_points, m)?)?;
    m.add_function(wrap_pyfunction!(density_profile, m)?)?;
    m.add_function(wrap_pyfunction!(divides_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(table1, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    Ok(())
}
