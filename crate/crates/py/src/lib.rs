use postlab::certify::{
    self, Certificate as CoreCertificate, CertifyError, CertifyOptions, Status, Strategy, SweepOptions,
    WitnessConfig, WitnessOptions, DEFAULT_PROBE_SAMPLES, DEFAULT_RETRIES,
};
use postlab::exactlin::{FMatrix, PrimeField, DEFAULT_PRIME};
use postlab::postnum;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: CertifyError) -> PyErr {
    match e {
        CertifyError::WitnessFailed { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Converts any serializable value into plain Python objects.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn options(seed: u64, prime: u64, retries: u32, strategy: &str) -> PyResult<CertifyOptions> {
    let strategy: Strategy = strategy.parse().map_err(PyValueError::new_err)?;
    Ok(CertifyOptions {
        prime,
        seed,
        retries,
        strategy,
    })
}

/// Outcome of one rank computation.
#[pyclass(module = "postlab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Certificate {
    inner: CoreCertificate,
}

#[pymethods]
impl Certificate {
    #[getter]
    fn m(&self) -> u64 {
        self.inner.m
    }
    #[getter]
    fn d(&self) -> u64 {
        self.inner.d
    }
    #[getter]
    fn t(&self) -> u64 {
        self.inner.t
    }
    #[getter]
    fn prime(&self) -> u64 {
        self.inner.prime
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }
    #[getter]
    fn strategy(&self) -> String {
        self.inner.strategy.to_string()
    }
    #[getter]
    fn n_forms(&self) -> u64 {
        self.inner.n_forms
    }
    #[getter]
    fn degree(&self) -> u64 {
        self.inner.degree
    }
    #[getter]
    fn rank(&self) -> u64 {
        self.inner.rank
    }
    #[getter]
    fn h0(&self) -> u64 {
        self.inner.h0
    }
    #[getter]
    fn h1(&self) -> u64 {
        self.inner.h1
    }
    #[getter]
    fn exceptional(&self) -> bool {
        self.inner.exceptional
    }
    #[getter]
    fn attempts(&self) -> u32 {
        self.inner.attempts
    }

    /// "MaximalRankCertified", "DeficitObserved" or "Unconfirmed".
    #[getter]
    fn status(&self) -> &'static str {
        match self.inner.status {
            Status::MaximalRankCertified => "MaximalRankCertified",
            Status::DeficitObserved { .. } => "DeficitObserved",
            Status::Unconfirmed => "Unconfirmed",
        }
    }

    fn is_certified(&self) -> bool {
        self.inner.is_certified()
    }

    fn agrees_with_classification(&self) -> bool {
        self.inner.agrees_with_classification()
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("certificate serializes")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Certificate(m={}, d={}, t={}, h0={}, h1={}, status={})",
            self.inner.m,
            self.inner.d,
            self.inner.t,
            self.inner.h0,
            self.inner.h1,
            self.status()
        )
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner.canonical() == other.inner.canonical()
    }
}

/// A built witness configuration with its checks.
#[pyclass(module = "postlab", frozen)]
pub struct Witness {
    inner: WitnessConfig,
}

#[pymethods]
impl Witness {
    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.to_string()
    }
    #[getter]
    fn m(&self) -> u64 {
        self.inner.m
    }
    #[getter]
    fn t(&self) -> u64 {
        self.inner.t
    }
    #[getter]
    fn passed(&self) -> bool {
        self.inner.passed()
    }
    #[getter]
    fn digest(&self) -> String {
        self.inner.digest()
    }

    /// `(name, expected, observed, passed)` per check.
    #[getter]
    fn checks(&self) -> Vec<(String, String, String, bool)> {
        self.inner
            .checks
            .iter()
            .map(|c| (c.name.clone(), c.expected.clone(), c.observed.clone(), c.passed))
            .collect()
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Witness(kind={}, m={}, t={}, passed={})", self.inner.kind, self.inner.m, self.inner.t, self.inner.passed())
    }
}

/// `(a, b)` with `C(m+2,3) + (k+1) a + b = C(k+3,3)` and `0 <= b <= k`.
#[pyfunction]
fn ab(m: u64, k: u64) -> PyResult<(u64, u64)> {
    let c = postnum::ab(m, k).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((c.a, c.b))
}

#[pyfunction]
fn critical_value(m: u64, d: u64) -> u64 {
    postnum::critical_value(m, d)
}

#[pyfunction]
fn expected_cohomology(m: u64, d: u64, t: u64) -> (u64, u64) {
    postnum::expected_cohomology(m, d, t)
}

#[pyfunction]
fn is_exceptional(m: u64, d: u64, t: u64) -> bool {
    postnum::is_exceptional(m, d, t)
}

/// The ledger reconciliation report as Markdown.
#[pyfunction]
#[pyo3(signature = (m_max = 60))]
fn reconcile(m_max: u64) -> String {
    postnum::render_reconciliation(&postnum::reconcile(m_max))
}

/// Rank of an integer matrix reduced mod `prime`.
#[pyfunction]
#[pyo3(signature = (rows, prime = DEFAULT_PRIME))]
fn rank_mod_p(rows: Vec<Vec<i64>>, prime: u64) -> PyResult<usize> {
    let field = PrimeField::new(prime).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("rows differ in length"));
    }
    Ok(FMatrix::from_rows(&field, &rows).rank(&field))
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (m, d, t, seed = 0, prime = DEFAULT_PRIME, retries = DEFAULT_RETRIES, strategy = "random"))]
fn certify_maximal_rank(
    py: Python<'_>,
    m: u64,
    d: u64,
    t: u64,
    seed: u64,
    prime: u64,
    retries: u32,
    strategy: &str,
) -> PyResult<Certificate> {
    let opts = options(seed, prime, retries, strategy)?;
    let inner = py.detach(|| certify::certify_maximal_rank(m, d, t, &opts)).map_err(py_err)?;
    Ok(Certificate { inner })
}

/// Certificates for one theorem cell as a dict.
#[pyfunction]
#[pyo3(signature = (m, d, seed = 0, prime = DEFAULT_PRIME, retries = DEFAULT_RETRIES))]
fn verify_theorem_cell(py: Python<'_>, m: u64, d: u64, seed: u64, prime: u64, retries: u32) -> PyResult<Py<PyAny>> {
    let opts = options(seed, prime, retries, "random")?;
    let verdict = py.detach(|| certify::verify_theorem_cell(m, d, &opts)).map_err(py_err)?;
    to_py(py, &verdict)
}

#[pyfunction]
#[pyo3(signature = (m, d, samples = DEFAULT_PROBE_SAMPLES, seed = 0, prime = DEFAULT_PRIME))]
fn exceptional_probe(py: Python<'_>, m: u64, d: u64, samples: u32, seed: u64, prime: u64) -> PyResult<Py<PyAny>> {
    let opts = options(seed, prime, DEFAULT_RETRIES, "random")?;
    let probe = py.detach(|| certify::exceptional_probe(m, d, samples, &opts)).map_err(py_err)?;
    to_py(py, &probe)
}

/// Builds witness `kind` ("b", "r" or "h"); a failed check raises `RuntimeError`.
#[pyfunction]
#[pyo3(signature = (kind, m, k = None, seed = 0, prime = DEFAULT_PRIME))]
fn witness(py: Python<'_>, kind: &str, m: u64, k: Option<u64>, seed: u64, prime: u64) -> PyResult<Witness> {
    let opts = WitnessOptions {
        prime,
        seed,
        ..WitnessOptions::default()
    };
    let built = py.detach(|| match kind.to_ascii_lowercase().as_str() {
        "b" => Ok(certify::build_witness_b(m, &opts)),
        "r" => Ok(certify::build_witness_r(m, &opts)),
        "h" => k
            .map(|k| certify::build_witness_h(m, k, &opts))
            .ok_or("witness h needs k"),
        _ => Err("kind must be one of b, r, h"),
    });
    let inner = built.map_err(PyValueError::new_err)?.map_err(py_err)?;
    Ok(Witness { inner })
}

/// Runs the theorem sweep; returns `{"cells": [...], "probes": [...]}`.
#[pyfunction]
#[pyo3(signature = (m_max, t_max, seed = 0, prime = DEFAULT_PRIME, jobs = 1))]
fn run_sweep(py: Python<'_>, m_max: u64, t_max: u64, seed: u64, prime: u64, jobs: usize) -> PyResult<Py<PyAny>> {
    let opts = SweepOptions {
        m_max,
        t_max,
        seed,
        prime,
        jobs: jobs.max(1),
        ..SweepOptions::default()
    };
    let result = py.detach(|| certify::run_sweep(&opts)).map_err(py_err)?;
    to_py(py, &result.canonical())
}

#[pymodule]
#[pyo3(name = "postlab")]
fn postlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DEFAULT_PRIME", DEFAULT_PRIME)?;
    m.add_class::<Certificate>()?;
    m.add_class::<Witness>()?;
    m.add_function(wrap_pyfunction!(ab, m)?)?;
    m.add_function(wrap_pyfunction!(critical_value, m)?)?;
    m.add_function(wrap_pyfunction!(expected_cohomology, m)?)?;
    m.add_function(wrap_pyfunction!(is_exceptional, m)?)?;
    m.add_function(wrap_pyfunction!(reconcile, m)?)?;
    m.add_function(wrap_pyfunction!(rank_mod_p, m)?)?;
    m.add_function(wrap_pyfunction!(certify_maximal_rank, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theorem_cell, m)?)?;
    m.add_function(wrap_pyfunction!(exceptional_probe, m)?)?;
    m.add_function(wrap_pyfunction!(witness, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
