use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use otsclust::eval::one_hot;
use otsclust::{ClusterConfig, Error, LagSelectionConfig, LagSet, Metric, OrdinalRange, OrdinalSeries, SquareMatrix};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(msg) => PyOSError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn lag_set(lags: Vec<usize>) -> PyResult<LagSet> {
    LagSet::new(lags).map_err(to_py)
}

fn square(rows: Vec<Vec<f64>>) -> PyResult<SquareMatrix> {
    SquareMatrix::from_rows(rows).map_err(to_py)
}

/// An ordinal series over the states 0..=n.
#[pyclass(name = "Series", module = "otsclust._otsclust", from_py_object)]
#[derive(Clone)]
pub struct PySeries {
    inner: OrdinalSeries,
}

#[pymethods]
impl PySeries {
    #[new]
    fn new(id: String, n: usize, states: Vec<usize>) -> PyResult<Self> {
        let range = OrdinalRange::new(n).map_err(to_py)?;
        Ok(Self { inner: OrdinalSeries::new(id, range, states).map_err(to_py)? })
    }

    #[getter]
    fn id(&self) -> &str {
        self.inner.id()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn states(&self) -> Vec<usize> {
        self.inner.states().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Series(id={:?}, n={}, len={})", self.inner.id(), self.inner.n(), self.inner.len())
    }
}

fn unwrap_series(series: Vec<PySeries>) -> Vec<OrdinalSeries> {
    series.into_iter().map(|s| s.inner).collect()
}

/// Pairwise dissimilarities with their marginal and serial components.
#[pyclass(name = "DistanceMatrix", module = "otsclust._otsclust", skip_from_py_object)]
#[derive(Clone)]
pub struct PyDistanceMatrix {
    inner: otsclust::DistanceMatrix,
}

#[pymethods]
impl PyDistanceMatrix {
    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids.clone()
    }

    #[getter]
    fn metric(&self) -> &'static str {
        self.inner.metric.as_str()
    }

    #[getter]
    fn lags(&self) -> Vec<usize> {
        self.inner.lags.lags().to_vec()
    }

    #[getter]
    fn total(&self) -> Vec<Vec<f64>> {
        self.inner.total.rows()
    }

    #[getter]
    fn marginal(&self) -> Vec<Vec<f64>> {
        self.inner.marginal.rows()
    }

    #[getter]
    fn serial(&self) -> Vec<Vec<f64>> {
        self.inner.serial.rows()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "DistanceMatrix(metric={}, lags={:?}, size={})",
            self.inner.metric,
            self.inner.lags.lags(),
            self.inner.len()
        )
    }
}

#[pyclass(name = "Partition", module = "otsclust._otsclust", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPartition {
    inner: otsclust::FuzzyPartition,
}

#[pymethods]
impl PyPartition {
    #[getter]
    fn memberships(&self) -> Vec<Vec<f64>> {
        self.inner.memberships.clone()
    }

    #[getter]
    fn medoids(&self) -> Vec<usize> {
        self.inner.medoids.clone()
    }

    /// Learned weight of the weighted solver, `None` otherwise.
    #[getter]
    fn beta(&self) -> Option<f64> {
        self.inner.beta
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    fn hard_labels(&self) -> Vec<usize> {
        self.inner.hard_labels()
    }

    fn __repr__(&self) -> String {
        format!(
            "Partition(clusters={}, objective={:.6e}, iterations={}, converged={})",
            self.inner.clusters(),
            self.inner.objective,
            self.inner.iterations,
            self.inner.converged
        )
    }
}

type ScenarioData = (Vec<PySeries>, Vec<Option<usize>>, usize, Vec<usize>);

/// Simulated benchmark data: `(series, labels, clusters, default_lags)`.
/// Isolated series carry the label `None`.
#[pyfunction]
#[pyo3(signature = (id, length=None, seed=0))]
fn scenario(py: Python<'_>, id: u32, length: Option<usize>, seed: u64) -> PyResult<ScenarioData> {
    let data = py.detach(|| otsclust::scenario(id, length, seed)).map_err(to_py)?;
    let series = data.series.into_iter().map(|inner| PySeries { inner }).collect();
    Ok((series, data.labels, data.clusters, data.default_lags.lags().to_vec()))
}

#[pyfunction]
#[pyo3(signature = (series, metric="d1", lags=vec![1]))]
fn distance_matrix(
    py: Python<'_>,
    series: Vec<PySeries>,
    metric: &str,
    lags: Vec<usize>,
) -> PyResult<PyDistanceMatrix> {
    let metric: Metric = metric.parse().map_err(to_py)?;
    let lags = lag_set(lags)?;
    let series = unwrap_series(series);
    let inner = py.detach(|| otsclust::distance_matrix(&series, metric, &lags)).map_err(to_py)?;
    Ok(PyDistanceMatrix { inner })
}

/// Per-series marginal features, ordinal kappas and count autocorrelations.
#[pyfunction]
#[pyo3(signature = (series, lags=vec![1]))]
fn features<'py>(py: Python<'py>, series: Vec<PySeries>, lags: Vec<usize>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let lags = lag_set(lags)?;
    let reprs = otsclust::build_reprs(&unwrap_series(series), &lags).map_err(to_py)?;
    reprs
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("id", r.id)?;
            d.set_item("loc", r.features.loc)?;
            d.set_item("disp", r.features.disp)?;
            d.set_item("asym", r.features.asym)?;
            d.set_item("skew", r.features.skew)?;
            d.set_item("cumulative", r.cumulative.values().to_vec())?;
            d.set_item("kappa", r.kappa)?;
            d.set_item("acf", r.acf)?;
            d.set_item("degenerate", r.degenerate)?;
            Ok(d)
        })
        .collect()
}

fn solver_config(
    clusters: usize,
    m: f64,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    weighted: bool,
    initial_beta: f64,
) -> ClusterConfig {
    let mut cfg = ClusterConfig::new(clusters, m).with_seed(seed).with_restarts(restarts);
    cfg.max_iter = max_iter;
    if weighted {
        cfg = cfg.weighted(initial_beta);
    }
    cfg
}

/// Standard or weighted fuzzy C-medoids on a distance matrix.
#[pyfunction]
#[pyo3(signature = (dm, clusters, m, seed=0, restarts=1, max_iter=100, weighted=false, initial_beta=0.5))]
#[allow(clippy::too_many_arguments)]
fn cluster(
    py: Python<'_>,
    dm: &PyDistanceMatrix,
    clusters: usize,
    m: f64,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    weighted: bool,
    initial_beta: f64,
) -> PyResult<PyPartition> {
    let cfg = solver_config(clusters, m, seed, restarts, max_iter, weighted, initial_beta);
    let inner = py.detach(|| otsclust::cluster(&dm.inner, &cfg)).map_err(to_py)?;
    Ok(PyPartition { inner })
}

/// Fuzzy C-medoids on an arbitrary dissimilarity matrix (list of rows).
#[pyfunction]
#[pyo3(signature = (matrix, clusters, m, seed=0, restarts=1, max_iter=100))]
fn fuzzy_cmedoids(
    py: Python<'_>,
    matrix: Vec<Vec<f64>>,
    clusters: usize,
    m: f64,
    seed: u64,
    restarts: usize,
    max_iter: usize,
) -> PyResult<PyPartition> {
    let d = square(matrix)?;
    let cfg = solver_config(clusters, m, seed, restarts, max_iter, false, 0.5);
    let inner = py.detach(|| otsclust::fuzzy_cmedoids(&d, &cfg)).map_err(to_py)?;
    Ok(PyPartition { inner })
}

/// Lag set chosen by Bonferroni-corrected serial independence tests.
#[pyfunction]
#[pyo3(signature = (series, alpha=0.05, max_lag=5))]
fn select_lags<'py>(
    py: Python<'py>,
    series: Vec<PySeries>,
    alpha: f64,
    max_lag: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = LagSelectionConfig { alpha, max_lag, ..LagSelectionConfig::default() };
    let series = unwrap_series(series);
    let r = py.detach(|| otsclust::select_lags(&series, &cfg)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("lags", r.lags.lags().to_vec())?;
    d.set_item("chosen", r.chosen)?;
    d.set_item("per_series", r.per_series)?;
    d.set_item("alpha_prime", r.alpha_prime)?;
    d.set_item("critical_value", r.critical_value)?;
    d.set_item("fallback", r.fallback)?;
    d.set_item("skipped", r.skipped)?;
    Ok(d)
}

/// `(ARIF, JIF)` of a fuzzy partition against hard reference labels.
#[pyfunction]
fn agreement(labels: Vec<usize>, memberships: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    let a = otsclust::agreement(&one_hot(&labels), &memberships).map_err(to_py)?;
    Ok((a.arif, a.jif))
}

type Scaling = (Vec<(f64, f64)>, f64, f64);

/// Two-dimensional metric scaling: `(points, stress, r_squared)`.
#[pyfunction]
fn mds_2d(py: Python<'_>, matrix: Vec<Vec<f64>>) -> PyResult<Scaling> {
    let d = square(matrix)?;
    let e = py.detach(|| otsclust::mds_2d(&d)).map_err(to_py)?;
    Ok((e.points.iter().map(|p| (p[0], p[1])).collect(), e.stress, e.r_squared))
}

#[pymodule]
pub fn _otsclust(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeries>()?;
    m.add_class::<PyDistanceMatrix>()?;
    m.add_class::<PyPartition>()?;
    m.add_function(wrap_pyfunction!(scenario, m)?)?;
    m.add_function(wrap_pyfunction!(distance_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(features, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(fuzzy_cmedoids, m)?)?;
    m.add_function(wrap_pyfunction!(select_lags, m)?)?;
    m.add_function(wrap_pyfunction!(agreement, m)?)?;
    m.add_function(wrap_pyfunction!(mds_2d, m)?)?;
    Ok(())
}
