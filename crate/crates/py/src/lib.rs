//! Python bindings for `mie_core`. Structured results come back as plain
//! dicts and lists, decoded from the same JSON the command line emits.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use mie_core::bmps::{self, SweepDirection, TensorMode, TruncationPolicy};
use mie_core::bounds;
use mie_core::cli::{self, acceptance, Command, ExperimentConfig, Format};
use mie_core::lattice::{DualGraph, LatticeKind, RegionPartition, SiteLattice};
use mie_core::saw::{self, WalkLattice, WeightModel};
use mie_core::stabilizer;
use mie_core::statevec::{self, CircuitSpec, EntropyOrder};
use mie_core::{rng, C64};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(x).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn entropy_order(order: &str) -> PyResult<EntropyOrder> {
    match order {
        "vn" => Ok(EntropyOrder::Vn),
        "renyi2" => Ok(EntropyOrder::Renyi2),
        _ => Err(PyValueError::new_err(format!("unknown entropy order {order:?}; use 'vn' or 'renyi2'"))),
    }
}

fn walk_lattice(name: &str) -> PyResult<WalkLattice> {
    serde_json::from_value(serde_json::Value::String(name.into())).map_err(value_err)
}

/// Diagonal bond state from Schmidt probabilities (normalized here).
fn bond_state(probabilities: &[f64]) -> PyResult<Vec<C64>> {
    let total: f64 = probabilities.iter().sum();
    if probabilities.is_empty() || probabilities.iter().any(|&p| !(p >= 0.0)) || !(total > 0.0) {
        return Err(PyValueError::new_err("Schmidt probabilities must be non-negative with a positive sum"));
    }
    let chi = probabilities.len();
    let mut w = vec![C64::new(0.0, 0.0); chi * chi];
    for (k, p) in probabilities.iter().enumerate() {
        w[k * chi + k] = C64::new((p / total).sqrt(), 0.0);
    }
    Ok(w)
}

/// Rectangular site lattice, `width` columns by `height` rows.
#[pyclass(name = "Lattice", frozen)]
struct PyLattice {
    inner: SiteLattice,
}

#[pymethods]
impl PyLattice {
    #[new]
    #[pyo3(signature = (width, height, kind = "square"))]
    fn new(width: usize, height: usize, kind: &str) -> PyResult<Self> {
        let kind = match kind {
            "square" => LatticeKind::Square,
            "triangular" => LatticeKind::Triangular,
            _ => return Err(PyValueError::new_err(format!("unknown lattice kind {kind:?}"))),
        };
        Ok(Self { inner: SiteLattice::new(kind, width, height).map_err(value_err)? })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges.clone()
    }

    fn degree(&self, site: usize) -> PyResult<usize> {
        if site >= self.inner.n_sites() {
            return Err(PyValueError::new_err(format!("site {site} out of range")));
        }
        Ok(self.inner.degree(site))
    }

    /// Region lists `(a, b, c)` of a named geometry.
    #[pyo3(signature = (geometry, a = None, c = None))]
    fn partition(&self, geometry: &str, a: Option<Vec<usize>>, c: Option<Vec<usize>>) -> PyResult<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let p = partition(&self.inner, geometry, a, c)?;
        Ok((p.a, p.b, p.c))
    }

    fn __repr__(&self) -> String {
        format!("Lattice(width={}, height={}, n_sites={})", self.inner.width, self.inner.height, self.inner.n_sites())
    }
}

fn partition(lat: &SiteLattice, geometry: &str, a: Option<Vec<usize>>, c: Option<Vec<usize>>) -> PyResult<RegionPartition> {
    match geometry {
        "strip" => RegionPartition::strip(lat),
        "half_chain" => RegionPartition::half_chain(lat),
        "custom" => match (a, c) {
            (Some(a), Some(c)) => RegionPartition::custom(lat.n_sites(), a, c),
            _ => return Err(PyValueError::new_err("custom geometry needs both a and c")),
        },
        _ => return Err(PyValueError::new_err(format!("unknown geometry {geometry:?}"))),
    }
    .map_err(value_err)
}

/// Dense pure state of a holographic circuit.
#[pyclass(name = "PureState", frozen)]
struct PyPureState {
    inner: statevec::PureState,
}

#[pymethods]
impl PyPureState {
    /// Prepares the circuit with Schmidt-form bonds on every edge and one
    /// Haar-random unitary per site.
    #[staticmethod]
    fn holographic(lattice: &PyLattice, schmidt: Vec<f64>, seed: u64) -> PyResult<Self> {
        let spec = CircuitSpec::holographic(lattice.inner.clone(), bond_state(&schmidt)?, seed);
        let inner = statevec::prepare(&spec, &mut rng::from_seed(seed)).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    #[pyo3(signature = (region, order = "vn"))]
    fn entropy(&self, region: Vec<usize>, order: &str) -> PyResult<f64> {
        if region.iter().any(|&s| s >= self.inner.n_sites()) {
            return Err(PyValueError::new_err("region site out of range"));
        }
        Ok(self.inner.entropy(&region, entropy_order(order)?))
    }

    /// Exact average entanglement of `A` after measuring every site
    /// outside `A ∪ C`.
    #[pyo3(signature = (lattice, geometry = "half_chain", a = None, c = None, order = "vn"))]
    fn mie(&self, lattice: &PyLattice, geometry: &str, a: Option<Vec<usize>>, c: Option<Vec<usize>>, order: &str) -> PyResult<f64> {
        let p = partition(&lattice.inner, geometry, a, c)?;
        statevec::mie_exact(&self.inner, &p, entropy_order(order)?).map_err(value_err)
    }
}

/// Stabilizer tableau on `n` qubits, starting in `|0…0⟩`.
#[pyclass(name = "Tableau")]
struct PyTableau {
    inner: stabilizer::Tableau,
}

#[pymethods]
impl PyTableau {
    #[new]
    fn new(n: usize) -> Self {
        Self { inner: stabilizer::Tableau::zero_state(n) }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn h(&mut self, q: usize) -> PyResult<()> {
        self.check(&[q])?;
        self.inner.h(q);
        Ok(())
    }

    fn s(&mut self, q: usize) -> PyResult<()> {
        self.check(&[q])?;
        self.inner.s(q);
        Ok(())
    }

    fn cnot(&mut self, control: usize, target: usize) -> PyResult<()> {
        self.check(&[control, target])?;
        if control == target {
            return Err(PyValueError::new_err("control and target must differ"));
        }
        self.inner.cnot(control, target);
        Ok(())
    }

    /// Applies a uniformly random Clifford to `qubits`.
    fn random_clifford(&mut self, qubits: Vec<usize>, seed: u64) -> PyResult<()> {
        self.check(&qubits)?;
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != qubits.len() {
            return Err(PyValueError::new_err("qubits must be distinct"));
        }
        let c = stabilizer::random_clifford(qubits.len(), &mut rng::from_seed(seed));
        self.inner.apply(&c, &qubits);
        Ok(())
    }

    /// Measures `Z` on `q`; returns `(outcome, was_random)`.
    fn measure_z(&mut self, q: usize, seed: u64) -> PyResult<(u8, bool)> {
        self.check(&[q])?;
        Ok(self.inner.measure_z(q, &mut rng::from_seed(seed)))
    }

    fn entropy_bits(&self, region: Vec<usize>) -> PyResult<usize> {
        self.check(&region)?;
        Ok(self.inner.entropy_bits(&region))
    }

    /// GHZ and Bell-pair counts of the tripartition `(h, i, j)`.
    fn tripartite_shape<'py>(&self, py: Python<'py>, h: Vec<usize>, i: Vec<usize>, j: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
        let shape = stabilizer::tripartite_shape(&self.inner, &h, &i, &j).map_err(value_err)?;
        to_py(py, &shape)
    }
}

impl PyTableau {
    fn check(&self, qubits: &[usize]) -> PyResult<()> {
        match qubits.iter().find(|&&q| q >= self.inner.n()) {
            Some(q) => Err(PyValueError::new_err(format!("qubit {q} out of range"))),
            None => Ok(()),
        }
    }
}

/// Planar network of random site tensors.
#[pyclass(name = "GridNetwork", frozen)]
struct PyGridNetwork {
    inner: bmps::GridNetwork,
}

#[pymethods]
impl PyGridNetwork {
    /// Gaussian site tensors with the Schmidt-form bond state on every edge.
    #[staticmethod]
    #[pyo3(signature = (lattice, schmidt, seed, exact = false))]
    fn random(lattice: &PyLattice, schmidt: Vec<f64>, seed: u64, exact: bool) -> PyResult<Self> {
        let mode = if exact { TensorMode::Exact } else { TensorMode::Gaussian };
        let inner = bmps::sample_random_tn(&lattice.inner, &bond_state(&schmidt)?, mode, &mut rng::from_seed(seed))
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Boundary-MPS contraction; `chi_max = None` contracts exactly.
    #[pyo3(signature = (chi_max = None, cutoff = 0.0, abort_tolerance = bmps::DEFAULT_ABORT_TOLERANCE, right_to_left = false))]
    fn contract<'py>(
        &self,
        py: Python<'py>,
        chi_max: Option<usize>,
        cutoff: f64,
        abort_tolerance: f64,
        right_to_left: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let policy = match chi_max {
            Some(n) => TruncationPolicy::new(n, cutoff, abort_tolerance).map_err(value_err)?,
            None => TruncationPolicy::exact(),
        };
        let dir = if right_to_left { SweepDirection::RightToLeft } else { SweepDirection::LeftToRight };
        py.detach(|| Ok::<_, PyErr>(bmps::contract_bmps(&self.inner, &policy, dir)))
            .and_then(|r| to_py(py, &r))
    }

    /// Brute-force contraction, for small networks.
    fn contract_exhaustive(&self) -> (f64, f64) {
        let z = bmps::contract_exhaustive(&self.inner);
        (z.re, z.im)
    }
}

#[pyfunction]
#[pyo3(signature = (n, lattice = "square"))]
fn count_rooted_walks(n: usize, lattice: &str) -> PyResult<u64> {
    Ok(saw::count_rooted_walks(walk_lattice(lattice)?, n))
}

#[pyfunction]
#[pyo3(signature = (l, lattice = "square"))]
fn count_rooted_polygons(l: usize, lattice: &str) -> PyResult<u64> {
    saw::count_rooted_polygons(walk_lattice(lattice)?, l).map_err(value_err)
}

/// Certified partition function of separating walls with `H = β|W|`.
#[pyfunction]
#[pyo3(signature = (lattice, beta, l_max, geometry = "strip", a = None, c = None))]
fn wall_partition_function<'py>(
    py: Python<'py>,
    lattice: &PyLattice,
    beta: f64,
    l_max: usize,
    geometry: &str,
    a: Option<Vec<usize>>,
    c: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = partition(&lattice.inner, geometry, a, c)?;
    let dual = DualGraph::planar(&lattice.inner);
    let z = saw::partition_function(&dual, &p, &WeightModel::PerEdge { beta }, l_max);
    to_py(py, &z)
}

#[pyfunction]
fn distillation_entropy_bound(eps: f64, d_prime: f64) -> PyResult<f64> {
    bounds::distillation_entropy_bound(eps, d_prime).map_err(value_err)
}

#[pyfunction]
fn wall_sum_eps_bound(z: f64, d_prime: f64) -> f64 {
    bounds::wall_sum_eps_bound(z, d_prime)
}

#[pyfunction]
fn mie_lower_bound<'py>(py: Python<'py>, z_upper: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bounds::mie_lower_bound(z_upper))
}

#[pyfunction]
#[pyo3(signature = (mu_log_upper = bounds::SQUARE_MU_LOG_UPPER))]
fn holographic_threshold<'py>(py: Python<'py>, mu_log_upper: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bounds::holographic_threshold(mu_log_upper))
}

/// Runs one `mielab` subcommand and returns its rendered report.
#[pyfunction]
#[pyo3(signature = (command, config = None, seed = None, format = "json"))]
fn run(py: Python<'_>, command: &str, config: Option<&str>, seed: Option<u64>, format: &str) -> PyResult<String> {
    let cmd = Command::ALL
        .into_iter()
        .find(|c| c.name() == command)
        .ok_or_else(|| PyValueError::new_err(format!("unknown subcommand {command:?}")))?;
    let format = match format {
        "json" => Format::Json,
        "csv" => Format::Csv,
        _ => return Err(PyValueError::new_err(format!("unknown format {format:?}"))),
    };
    let mut cfg = match config {
        Some(text) => ExperimentConfig::from_json(text).map_err(value_err)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = py.detach(|| cli::run(cmd, &cfg)).map_err(value_err)?;
    Ok(report.render(format))
}

/// Runs acceptance criteria (all when `criteria` is empty).
#[pyfunction]
#[pyo3(signature = (criteria = Vec::new()))]
fn selfcheck<'py>(py: Python<'py>, criteria: Vec<u32>) -> PyResult<Bound<'py, PyAny>> {
    let ids = if criteria.is_empty() { acceptance::ALL.to_vec() } else { criteria };
    let results: Vec<_> = py.detach(|| ids.iter().map(|&id| acceptance::run_criterion(id)).collect());
    to_py(py, &results)
}

#[pymodule]
fn mielab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyPureState>()?;
    m.add_class::<PyTableau>()?;
    m.add_class::<PyGridNetwork>()?;
    m.add_function(wrap_pyfunction!(count_rooted_walks, m)?)?;
    m.add_function(wrap_pyfunction!(count_rooted_polygons, m)?)?;
    m.add_function(wrap_pyfunction!(wall_partition_function, m)?)?;
    m.add_function(wrap_pyfunction!(distillation_entropy_bound, m)?)?;
    m.add_function(wrap_pyfunction!(wall_sum_eps_bound, m)?)?;
    m.add_function(wrap_pyfunction!(mie_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(holographic_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(selfcheck, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
