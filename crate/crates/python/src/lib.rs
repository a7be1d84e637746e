//! Python bindings. Samples cross the boundary as lists of floats; results
//! come back as floats, lists or dicts.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use trelt::distributions::{DistKind, HeavyTailDist, RngStream};
use trelt::error::{Error, ErrorClass};
use trelt::extreme_lp::{self, ExtraMVariant};
use trelt::lp_quantile::{empirical_lp_quantile, Level, Sample};
use trelt::oracle::{self, QuadratureSpec};
use trelt::rolling::{self, LossSeries, RollingConfig};
use trelt::sim_harness::Harness;
use trelt::tail_index;
use trelt::trelt as tr;

fn to_py(e: Error) -> PyErr {
    let msg = format!("[{}] {e}", e.code());
    match e.class() {
        ErrorClass::Validation => PyValueError::new_err(msg),
        ErrorClass::Numeric => PyArithmeticError::new_err(msg),
    }
}

fn sample(data: Vec<f64>) -> PyResult<Sample> {
    Sample::new(data).map_err(to_py)
}

/// A reference heavy-tailed law: "pareto", "frechet", "student_t" or
/// "koenker_bassett" (which ignores `gamma`).
#[pyclass(name = "Distribution", module = "trelt_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyDistribution {
    inner: HeavyTailDist,
}

#[pymethods]
impl PyDistribution {
    #[new]
    #[pyo3(signature = (kind, gamma=None))]
    fn new(kind: &str, gamma: Option<f64>) -> PyResult<Self> {
        let kind: DistKind = kind.parse().map_err(to_py)?;
        let inner = match (kind, gamma) {
            (DistKind::KoenkerBassett, _) => HeavyTailDist::koenker_bassett(),
            (k, Some(g)) => HeavyTailDist::new(k, g).map_err(to_py)?,
            (_, None) => return Err(PyValueError::new_err("gamma is required for this law")),
        };
        Ok(Self { inner })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn survival(&self, x: f64) -> f64 {
        self.inner.survival(x)
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.pdf(x)
    }

    fn quantile(&self, tau: f64) -> PyResult<f64> {
        self.inner.quantile(tau).map_err(to_py)
    }

    /// `n` draws from stream `stream_id` of `seed`; reproducible across platforms.
    #[pyo3(signature = (n, seed, stream_id=0))]
    fn sample(&self, n: usize, seed: u64, stream_id: u64) -> PyResult<Vec<f64>> {
        let s = self
            .inner
            .sample(n, &mut RngStream::new(seed, stream_id))
            .map_err(to_py)?;
        Ok(s.values().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Distribution({:?}, gamma={})", self.inner.kind().name(), self.inner.gamma())
    }
}

/// Orders `(p, q)`. `check` is "strict" (default), "moment" or "none".
#[pyclass(name = "OrderPair", module = "trelt_py", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyOrderPair {
    inner: tr::OrderPair,
}

#[pymethods]
impl PyOrderPair {
    #[new]
    #[pyo3(signature = (p, q, gamma, check="strict"))]
    fn new(p: f64, q: f64, gamma: f64, check: &str) -> PyResult<Self> {
        let inner = match check {
            "strict" => tr::OrderPair::new(p, q, gamma),
            "moment" => tr::OrderPair::moment(p, q, gamma),
            "none" => tr::OrderPair::unchecked(p, q, gamma),
            other => return Err(PyValueError::new_err(format!("unknown check level `{other}`"))),
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    fn __repr__(&self) -> String {
        format!("OrderPair{}", self.inner)
    }
}

#[pyfunction]
fn lp_quantile(data: Vec<f64>, p: f64, tau: f64) -> PyResult<f64> {
    let level = Level::from_tau(tau).map_err(to_py)?;
    empirical_lp_quantile(&sample(data)?, p, level).map_err(to_py)
}

#[pyfunction]
fn hill(data: Vec<f64>, k: usize) -> PyResult<f64> {
    tail_index::hill(&sample(data)?, k).map_err(to_py)
}

/// Dict of lists: k, gamma_hat, ci_low, ci_high.
#[pyfunction]
fn hill_series<'py>(py: Python<'py>, data: Vec<f64>, k_min: usize, k_max: usize) -> PyResult<Bound<'py, PyDict>> {
    let s = tail_index::hill_series(&sample(data)?, k_min, k_max).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("k", s.k_values)?;
    d.set_item("gamma_hat", s.gamma_hat)?;
    d.set_item("ci_low", s.ci_low)?;
    d.set_item("ci_high", s.ci_high)?;
    Ok(d)
}

/// Small-level limit of the transition multiplier.
#[pyfunction]
fn ctrelt_limit(gamma: f64, p: f64, q: f64) -> PyResult<f64> {
    tr::ctrelt_limit_ell(gamma, p, q).map_err(to_py)
}

/// Limit of the Lp-quantile ratio `theta_p / theta_q` at the same level.
#[pyfunction]
fn ratio_limit(gamma: f64, p: f64, q: f64) -> PyResult<f64> {
    tr::ratio_limit_l(gamma, p, q).map_err(to_py)
}

#[pyfunction]
fn intermediate_ctrelt(data: Vec<f64>, pair: PyOrderPair, eps_n: f64) -> PyResult<f64> {
    Ok(tr::intermediate_ctrelt(&sample(data)?, pair.inner, eps_n).map_err(to_py)?.value)
}

#[pyfunction]
fn extreme_ctrelt(data: Vec<f64>, pair: PyOrderPair, eps_n: f64, eps_prime: f64, gamma_hat: f64) -> PyResult<f64> {
    Ok(tr::extreme_ctrelt(&sample(data)?, pair.inner, eps_n, eps_prime, gamma_hat)
        .map_err(to_py)?
        .value)
}

/// Extreme Lp-quantile at `1 - eps_prime`. `method` is one of "bm", "qua",
/// "extram1", "extram2", "extram3"; the ExtraM methods need `q`.
#[pyfunction]
#[pyo3(signature = (data, method, p, eps_n, eps_prime, gamma_hat, q=None))]
fn extreme_lp_quantile(
    data: Vec<f64>,
    method: &str,
    p: f64,
    eps_n: f64,
    eps_prime: f64,
    gamma_hat: f64,
    q: Option<f64>,
) -> PyResult<f64> {
    let s = sample(data)?;
    let variant = match method.to_ascii_lowercase().as_str() {
        "bm" => return Ok(extreme_lp::bm_estimator(&s, p, eps_n, eps_prime, gamma_hat).map_err(to_py)?.value),
        "qua" => return Ok(extreme_lp::qua_estimator(&s, p, eps_n, eps_prime, gamma_hat).map_err(to_py)?.value),
        "extram1" => ExtraMVariant::I,
        "extram2" => ExtraMVariant::II,
        "extram3" => ExtraMVariant::III,
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    };
    let q = q.ok_or_else(|| PyValueError::new_err("the ExtraM methods need q"))?;
    let pair = tr::OrderPair::unchecked(p, q, gamma_hat).map_err(to_py)?;
    Ok(extreme_lp::extram(&s, pair, eps_n, eps_prime, gamma_hat, variant).map_err(to_py)?.value)
}

#[pyfunction]
fn true_lp_quantile(dist: &PyDistribution, p: f64, tau: f64) -> PyResult<f64> {
    let level = Level::from_tau(tau).map_err(to_py)?;
    oracle::true_lp_quantile(&dist.inner, p, level, &QuadratureSpec::default()).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (dist, pair, eps, tau0=0.0))]
fn true_ctrelt(dist: &PyDistribution, pair: PyOrderPair, eps: f64, tau0: f64) -> PyResult<f64> {
    oracle::true_ctrelt(&dist.inner, pair.inner, eps, tau0, &QuadratureSpec::default()).map_err(to_py)
}

#[pyfunction]
fn true_dual_ctrelt(dist: &PyDistribution, pair: PyOrderPair, eps: f64) -> PyResult<f64> {
    oracle::true_dual_ctrelt(&dist.inner, pair.inner, eps, &QuadratureSpec::default()).map_err(to_py)
}

/// Runs a config file and returns one dict per MSRE cell.
#[pyfunction]
#[pyo3(signature = (config, workers=1, replications=None))]
fn simulate<'py>(
    py: Python<'py>,
    config: PathBuf,
    workers: usize,
    replications: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let table = py
        .detach(|| {
            let mut cfgs = trelt::config::load_config(&config)?;
            if let Some(r) = replications {
                cfgs.iter_mut().for_each(|c| c.replications = r);
            }
            Harness::new(workers)?.run_all(&cfgs)
        })
        .map_err(to_py)?;
    table
        .cells
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("experiment", &c.experiment)?;
            d.set_item("dist", c.dist.name())?;
            d.set_item("gamma", c.gamma)?;
            d.set_item("p", c.p)?;
            d.set_item("q", c.q)?;
            d.set_item("n", c.n)?;
            d.set_item("k", c.k)?;
            d.set_item("method", c.method.name())?;
            d.set_item("truth", c.truth)?;
            d.set_item("msre", c.msre)?;
            d.set_item("skip_count", c.skip_count)?;
            Ok(d)
        })
        .collect()
}

/// Moving-window estimates on a loss series; returns the CSV text the CLI writes.
#[pyfunction]
#[pyo3(signature = (losses, dates, window=1800, k=80, pairs=vec![(2.0, 1.0), (2.2, 1.5), (2.4, 2.0)], eps_prime=0.005, gamma_ref=0.34))]
#[allow(clippy::too_many_arguments)]
fn rolling_csv(
    py: Python<'_>,
    losses: Vec<f64>,
    dates: Vec<String>,
    window: usize,
    k: usize,
    pairs: Vec<(f64, f64)>,
    eps_prime: f64,
    gamma_ref: f64,
) -> PyResult<String> {
    let dates = dates
        .iter()
        .map(|d| {
            chrono_date(d).ok_or_else(|| PyValueError::new_err(format!("malformed date `{d}` (expected YYYY-MM-DD)")))
        })
        .collect::<PyResult<Vec<_>>>()?;
    if dates.len() != losses.len() {
        return Err(PyValueError::new_err("losses and dates differ in length"));
    }
    let cfg = RollingConfig::new(window, k, &pairs, eps_prime, gamma_ref).map_err(to_py)?;
    let series = LossSeries { dates, values: losses };
    let result = py
        .detach(|| rolling::rolling_estimates(&series, &cfg))
        .map_err(to_py)?;
    let mut buf = Vec::new();
    result.write_csv(&mut buf).map_err(to_py)?;
    String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn chrono_date(s: &str) -> Option<trelt::rolling::Date> {
    trelt::rolling::Date::parse_from_str(s, "%Y-%m-%d").ok()
}

#[pymodule]
fn trelt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyOrderPair>()?;
    m.add_function(wrap_pyfunction!(lp_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(hill, m)?)?;
    m.add_function(wrap_pyfunction!(hill_series, m)?)?;
    m.add_function(wrap_pyfunction!(ctrelt_limit, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_limit, m)?)?;
    m.add_function(wrap_pyfunction!(intermediate_ctrelt, m)?)?;
    m.add_function(wrap_pyfunction!(extreme_ctrelt, m)?)?;
    m.add_function(wrap_pyfunction!(extreme_lp_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(true_lp_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(true_ctrelt, m)?)?;
    m.add_function(wrap_pyfunction!(true_dual_ctrelt, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(rolling_csv, m)?)?;
    Ok(())
}
