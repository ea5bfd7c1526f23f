//! Python bindings. Reports cross the boundary as plain dicts and lists.

use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use starnet_core::encoding;
use starnet_core::lhv;
use starnet_core::network::{self, ScenarioConfig};
use starnet_core::optimize::{self, SeesawOptions};
use starnet_core::sos;
use starnet_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Index { .. } => PyIndexError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// The `2^{m-1}` sign patterns with leading 0, in lexicographic order.
#[pyclass(name = "EncodingTable", module = "starnet", frozen)]
struct PyEncodingTable {
    inner: encoding::EncodingTable,
}

#[pymethods]
impl PyEncodingTable {
    #[new]
    fn new(m: usize) -> PyResult<Self> {
        Ok(Self {
            inner: encoding::generate_table(m).map_err(py_err)?,
        })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Bit string of row `i` (1-based).
    fn row(&self, i: usize) -> PyResult<String> {
        self.inner.row_string(i).map_err(py_err)
    }

    fn sign_vector(&self, i: usize) -> PyResult<Vec<i8>> {
        Ok(self
            .inner
            .sign_vector(i)
            .map_err(py_err)?
            .entries()
            .to_vec())
    }

    fn hamming_weight(&self, i: usize) -> PyResult<u32> {
        self.inner.hamming_weight(i).map_err(py_err)
    }

    fn generator_matrix(&self) -> Vec<Vec<u8>> {
        self.inner.generator_matrix()
    }

    fn __repr__(&self) -> String {
        format!("EncodingTable(m={})", self.inner.m())
    }
}

/// One star network: `n` edge parties, `m` settings, Bell pairs per link.
#[pyclass(name = "Scenario", module = "starnet", frozen)]
struct PyScenario {
    cfg: ScenarioConfig,
}

impl PyScenario {
    fn table(&self) -> PyResult<encoding::EncodingTable> {
        encoding::generate_table(self.cfg.m).map_err(py_err)
    }

    fn strategy(&self, seed: Option<u64>) -> PyResult<network::QuantumStrategy> {
        use rand::SeedableRng;
        match seed {
            Some(s) => {
                network::random_strategy(&self.cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(s))
            }
            None => network::build_optimal_strategy(&self.cfg),
        }
        .map_err(py_err)
    }
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (n, m, copies=None))]
    fn new(n: usize, m: usize, copies: Option<usize>) -> PyResult<Self> {
        let cfg = match copies {
            Some(c) => ScenarioConfig::with_copies(n, m, c),
            None => ScenarioConfig::new(n, m),
        }
        .map_err(py_err)?;
        Ok(Self { cfg })
    }

    #[getter]
    fn n(&self) -> usize {
        self.cfg.n
    }

    #[getter]
    fn m(&self) -> usize {
        self.cfg.m
    }

    #[getter]
    fn copies(&self) -> usize {
        self.cfg.copies_per_link
    }

    /// Evaluation report of the optimal strategy, or of a random one when a
    /// seed is given. `v` sets the Werner visibility on every link.
    #[pyo3(signature = (seed=None, v=1.0))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        seed: Option<u64>,
        v: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let table = self.table()?;
        let strat = self.strategy(seed)?;
        let strat =
            optimize::with_werner_links(&strat, self.cfg.copies_per_link, v).map_err(py_err)?;
        let report = py
            .detach(|| network::evaluate_quantum(&self.cfg, &table, &strat))
            .map_err(py_err)?;
        to_py(py, &report)
    }

    #[pyo3(signature = (seed=None))]
    fn certificate<'py>(&self, py: Python<'py>, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
        let table = self.table()?;
        let strat = self.strategy(seed)?;
        let r = py
            .detach(|| sos::certificate(&self.cfg, &table, &strat))
            .map_err(py_err)?;
        to_py(py, &r)
    }

    /// Exhaustive maximum over deterministic strategies.
    #[pyo3(signature = (max_states=lhv::DEFAULT_MAX_STATES))]
    fn classical_max<'py>(&self, py: Python<'py>, max_states: u64) -> PyResult<Bound<'py, PyAny>> {
        let r = py
            .detach(|| lhv::exhaustive_strategy_max(&self.cfg, max_states))
            .map_err(py_err)?;
        to_py(py, &r)
    }

    #[pyo3(signature = (v_min=0.0, v_max=1.0, steps=21))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        v_min: f64,
        v_max: f64,
        steps: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let table = self.table()?;
        let base = self.strategy(None)?;
        let grid = optimize::linear_grid(v_min, v_max, steps);
        let copies = self.cfg.copies_per_link;
        let r = py
            .detach(|| {
                optimize::visibility_sweep(
                    &self.cfg,
                    &table,
                    |v| optimize::with_werner_links(&base, copies, v),
                    &grid,
                )
            })
            .map_err(py_err)?;
        to_py(py, &r)
    }

    /// Best delta found by the seesaw and the per-seed values.
    #[pyo3(signature = (seeds=10, seed=0, max_iters=2000, v=1.0))]
    fn seesaw<'py>(
        &self,
        py: Python<'py>,
        seeds: usize,
        seed: u64,
        max_iters: usize,
        v: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let opts = SeesawOptions {
            max_iters,
            visibility: v,
            ..SeesawOptions::default()
        };
        let seeds = optimize::seed_range(seed, seeds);
        let s = py
            .detach(|| optimize::seesaw_best(&self.cfg, &seeds, &opts))
            .map_err(py_err)?;
        #[derive(Serialize)]
        struct Out {
            best_seed: u64,
            best_delta: f64,
            converged: bool,
            per_seed: Vec<(u64, f64)>,
        }
        to_py(
            py,
            &Out {
                best_seed: s.best.seed,
                best_delta: s.best.delta,
                converged: s.best.converged,
                per_seed: s.per_seed,
            },
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(n={}, m={}, copies={})",
            self.cfg.n, self.cfg.m, self.cfg.copies_per_link
        )
    }
}

#[pyfunction]
fn generate_table(m: usize) -> PyResult<PyEncodingTable> {
    PyEncodingTable::new(m)
}

#[pyfunction]
fn alpha_closed_form(m: usize) -> PyResult<u128> {
    lhv::alpha_closed_form(m).map_err(py_err)
}

#[pyfunction]
fn quantum_optimum(m: usize) -> f64 {
    network::quantum_optimum_formula(m)
}

#[pyfunction]
fn classical_bound<'py>(py: Python<'py>, m: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &lhv::classical_bound(m).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (m_min=2, m_max=50))]
fn bounds_table<'py>(py: Python<'py>, m_min: usize, m_max: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &network::bounds_table(m_min..=m_max).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (n, m, v, seeds=10, seed=0, max_iters=2000))]
fn activation<'py>(
    py: Python<'py>,
    n: usize,
    m: usize,
    v: f64,
    seeds: usize,
    seed: u64,
    max_iters: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let seeds = optimize::seed_range(seed, seeds);
    let r = py
        .detach(|| optimize::activation_experiment(n, m, v, &seeds, max_iters))
        .map_err(py_err)?;
    to_py(py, &r)
}

#[pymodule]
fn starnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEncodingTable>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(generate_table, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(classical_bound, m)?)?;
    m.add_function(wrap_pyfunction!(bounds_table, m)?)?;
    m.add_function(wrap_pyfunction!(activation, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
