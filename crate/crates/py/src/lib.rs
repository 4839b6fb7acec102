//! Python bindings: a `Group` class over F_p^d plus the pipeline entry point.
//! Structured results cross the boundary as JSON and come back as dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use zerosum::nullstellensatz::{weighted_zero_sum, WeightedInstance};
use zerosum::oracle::{enumerate_subsums, find_zero_sum_subset, olson_constant, SearchBudget, ZeroSumCertificate};
use zerosum::pipeline::{find_zero_sum, verify_certificate, verify_trace, PipelineConfig};
use zerosum::{Error, GroupElement, GroupMultiset, GroupParams};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Internal(msg) => PyRuntimeError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn coords(x: &GroupElement) -> Vec<u32> {
    x.0.clone()
}

#[pyclass(frozen, module = "zerosum_py")]
struct Group {
    params: GroupParams,
}

impl Group {
    fn elements(&self, points: &[Vec<i64>]) -> PyResult<Vec<GroupElement>> {
        points.iter().map(|c| self.params.element(c).map_err(py_err)).collect()
    }

    fn multiset(&self, points: &[Vec<i64>]) -> PyResult<GroupMultiset> {
        Ok(GroupMultiset::from_elements(self.elements(points)?))
    }
}

#[pymethods]
impl Group {
    #[new]
    fn new(p: u32, d: usize) -> PyResult<Self> {
        Ok(Group { params: GroupParams::new(p, d).map_err(py_err)? })
    }

    #[getter]
    fn p(&self) -> u32 {
        self.params.p
    }

    #[getter]
    fn d(&self) -> usize {
        self.params.d
    }

    fn order(&self) -> u64 {
        self.params.states()
    }

    fn add(&self, x: Vec<i64>, y: Vec<i64>) -> PyResult<Vec<u32>> {
        let (x, y) = (self.params.element(&x).map_err(py_err)?, self.params.element(&y).map_err(py_err)?);
        Ok(coords(&self.params.add(&x, &y)))
    }

    /// All nonempty subset sums, as sorted coordinate lists.
    fn subsums(&self, points: Vec<Vec<i64>>) -> PyResult<Vec<Vec<u32>>> {
        let table = enumerate_subsums(&self.params, &self.multiset(&points)?).map_err(py_err)?;
        Ok(table.elements().iter().map(coords).collect())
    }

    /// A nonempty zero-sum sub-multiset, or None.
    fn zero_sum_subset(&self, points: Vec<Vec<i64>>) -> PyResult<Option<Vec<Vec<u32>>>> {
        let cert = find_zero_sum_subset(&self.params, &self.multiset(&points)?).map_err(py_err)?;
        Ok(cert.map(|c| c.elements.iter().map(coords).collect()))
    }

    #[pyo3(signature = (max_ms=None))]
    fn olson<'py>(&self, py: Python<'py>, max_ms: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
        let mut budget = SearchBudget::default();
        if let Some(ms) = max_ms {
            budget.max_time = Some(std::time::Duration::from_millis(ms));
        }
        let r = py.detach(|| olson_constant(&self.params, &budget)).map_err(py_err)?;
        to_py(py, &r)
    }

    /// Coefficients a_i in {0} or [r, w_i - r] with sum a_i y_i = 0, or None.
    fn weighted_zero_sum(&self, points: Vec<Vec<i64>>, weights: Vec<u64>, r: u64) -> PyResult<Option<Vec<u64>>> {
        let inst = WeightedInstance::new(&self.params, self.elements(&points)?, weights, r).map_err(py_err)?;
        Ok(weighted_zero_sum(&inst).map_err(py_err)?.map(|s| s.a))
    }

    fn verify_certificate(&self, points: Vec<Vec<i64>>, subset: Vec<Vec<i64>>) -> PyResult<bool> {
        let cert = ZeroSumCertificate::new(&self.params, self.elements(&subset)?);
        Ok(verify_certificate(&self.params, &self.multiset(&points)?, &cert))
    }

    /// Staged search. Returns {"certificate", "failure", "trace", "checks"}.
    #[pyo3(signature = (points, epsilon="1/2", seed=0))]
    fn find_zero_sum<'py>(&self, py: Python<'py>, points: Vec<Vec<i64>>, epsilon: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let x = self.multiset(&points)?;
        let cfg = PipelineConfig { epsilon: epsilon.parse().map_err(py_err)?, seed, ..Default::default() };
        let run = py.detach(|| find_zero_sum(&self.params, &x, &cfg)).map_err(py_err)?;
        let checks = verify_trace(&self.params, &x, &run.trace);
        to_py(py, &serde_json::json!({
            "certificate": run.certificate,
            "failure": run.failure,
            "trace": run.trace,
            "checks": checks,
        }))
    }

    fn __repr__(&self) -> String {
        format!("Group(p={}, d={})", self.params.p, self.params.d)
    }
}

#[pymodule]
fn zerosum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Group>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
