//! Python bindings. The module is importable as `comparison_sampling`.

use std::sync::{Mutex, MutexGuard};

use comparison_sampling as cs;
use cs::stats;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: cs::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

fn parse_kind(name: &str) -> PyResult<cs::SamplerKind> {
    name.parse().map_err(|e: String| PyValueError::new_err(e))
}

fn parse_scheme(tag: &str) -> PyResult<cs::Scheme> {
    cs::Scheme::from_tag(tag).ok_or_else(|| PyValueError::new_err(format!("unknown scheme {tag:?}")))
}

/// Metered source of `w`-bit uniforms with a recycling stack.
#[pyclass(name = "UniformSource", module = "comparison_sampling")]
struct PyUniformSource {
    inner: Mutex<cs::UniformSource>,
}

#[pymethods]
impl PyUniformSource {
    #[new]
    #[pyo3(signature = (seed = 0, word_bits = 53))]
    fn new(seed: u64, word_bits: u32) -> PyResult<Self> {
        let src = cs::UniformSource::with_word_bits(seed, word_bits).map_err(value_error)?;
        Ok(Self { inner: Mutex::new(src) })
    }

    /// Fresh words consumed so far.
    #[getter]
    fn draws(&self) -> u64 {
        lock(&self.inner).draws()
    }

    #[getter]
    fn word_bits(&self) -> u32 {
        lock(&self.inner).word_bits()
    }

    #[getter]
    fn recycling(&self) -> bool {
        lock(&self.inner).recycling()
    }

    #[setter]
    fn set_recycling(&self, enabled: bool) {
        lock(&self.inner).set_recycling(enabled);
    }

    #[getter]
    fn recycled_len(&self) -> usize {
        lock(&self.inner).recycled_len()
    }

    fn fresh_uniform(&self) -> f64 {
        lock(&self.inner).fresh_uniform()
    }

    fn next_uniform(&self) -> f64 {
        lock(&self.inner).next_uniform()
    }

    fn geometric_index(&self) -> u32 {
        lock(&self.inner).geometric_index()
    }

    fn random_sign(&self) -> f64 {
        lock(&self.inner).random_sign()
    }

    fn __repr__(&self) -> String {
        let s = lock(&self.inner);
        format!("UniformSource(word_bits={}, draws={}, recycling={})", s.word_bits(), s.draws(), s.recycling())
    }
}

#[pyclass(name = "IntervalTable", module = "comparison_sampling", frozen)]
struct PyIntervalTable {
    inner: cs::IntervalTable,
}

#[pymethods]
impl PyIntervalTable {
    #[new]
    #[pyo3(signature = (scheme, k = 53))]
    fn new(scheme: &str, k: usize) -> PyResult<Self> {
        let inner = cs::IntervalTable::build(parse_scheme(scheme)?, k).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme().tag()
    }

    /// `[a_0, ..., a_K]`.
    #[getter]
    fn boundaries(&self) -> Vec<f64> {
        self.inner.boundaries().to_vec()
    }

    /// `q_1, ..., q_K`.
    #[getter]
    fn selection_probs(&self) -> Vec<f64> {
        (1..=self.inner.len()).map(|k| self.inner.selection_prob(k)).collect()
    }

    fn interval(&self, k: usize) -> PyResult<(f64, f64)> {
        self.check(k)?;
        Ok(self.inner.interval(k))
    }

    fn gmax(&self, k: usize) -> PyResult<f64> {
        self.check(k)?;
        Ok(self.inner.gmax(k))
    }

    fn shifted_exponent(&self, k: usize, x: f64) -> PyResult<f64> {
        self.check(k)?;
        Ok(self.inner.shifted_exponent(k, x))
    }

    fn dump(&self) -> String {
        self.inner.dump()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

impl PyIntervalTable {
    fn check(&self, k: usize) -> PyResult<()> {
        if k == 0 || k > self.inner.len() {
            return Err(PyValueError::new_err(format!("interval {k} outside 1..={}", self.inner.len())));
        }
        Ok(())
    }
}

/// One of the eight generators, owning its source.
#[pyclass(name = "Sampler", module = "comparison_sampling")]
struct PySampler {
    inner: Mutex<cs::Sampler>,
}

#[pymethods]
impl PySampler {
    #[new]
    #[pyo3(signature = (kind, seed = 0, k = None, recycling = None))]
    fn new(kind: &str, seed: u64, k: Option<usize>, recycling: Option<bool>) -> PyResult<Self> {
        let kind = parse_kind(kind)?;
        let mut config = match k {
            Some(k) => cs::SamplerConfig::with_table_len(kind, k),
            None => cs::SamplerConfig::new(kind),
        }
        .map_err(value_error)?;
        if let Some(on) = recycling {
            config = config.recycling(on);
        }
        let sampler = cs::Sampler::new(config, cs::UniformSource::new(seed)).map_err(value_error)?;
        Ok(Self { inner: Mutex::new(sampler) })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        lock(&self.inner).kind().name()
    }

    #[getter]
    fn draws(&self) -> u64 {
        lock(&self.inner).source().draws()
    }

    fn next(&self) -> PyResult<f64> {
        lock(&self.inner).next_value().map_err(value_error)
    }

    /// `(value, interval_k)`; `interval_k` is `None` for the baselines and wallace.
    fn sample(&self) -> PyResult<(f64, Option<u32>)> {
        let s = lock(&self.inner).next_sample().map_err(value_error)?;
        Ok((s.value, s.interval))
    }

    fn take(&self, py: Python<'_>, n: usize) -> PyResult<Vec<f64>> {
        py.detach(|| lock(&self.inner).take(n)).map_err(value_error)
    }
}

/// Wallace pool with its own source.
#[pyclass(name = "NormalPool", module = "comparison_sampling")]
struct PyNormalPool {
    inner: Mutex<(cs::NormalPool, cs::UniformSource)>,
}

#[pymethods]
impl PyNormalPool {
    #[new]
    #[pyo3(signature = (size = 4096, seed = 0))]
    fn new(size: usize, seed: u64) -> PyResult<Self> {
        let mut src = cs::UniformSource::new(seed);
        let pool = cs::NormalPool::new(size, &mut src).map_err(value_error)?;
        Ok(Self { inner: Mutex::new((pool, src)) })
    }

    fn next_normal(&self) -> PyResult<f64> {
        let mut guard = lock(&self.inner);
        let (pool, src) = &mut *guard;
        pool.next_normal(src).map_err(value_error)
    }

    /// One in-place transform pass.
    fn refresh(&self) {
        let mut guard = lock(&self.inner);
        let (pool, src) = &mut *guard;
        pool.refresh(src);
    }

    fn sum_of_squares(&self) -> f64 {
        lock(&self.inner).0.sum_of_squares()
    }

    #[getter]
    fn norm_sq(&self) -> f64 {
        lock(&self.inner).0.norm_sq()
    }

    #[getter]
    fn pass_count(&self) -> u64 {
        lock(&self.inner).0.pass_count()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        lock(&self.inner).0.values().to_vec()
    }

    fn __len__(&self) -> usize {
        lock(&self.inner).0.len()
    }
}

/// Descending-run test with `u_1 = g`: `(accepted, n, (u_n, u_next))`.
#[pyfunction]
fn run_test(g: f64, source: &PyUniformSource) -> PyResult<(bool, u32, (f64, f64))> {
    let r = cs::run_test(g, &mut lock(&source.inner)).map_err(value_error)?;
    Ok((r.accepted, r.n, r.terminal_pair))
}

#[pyfunction]
fn run_length_pmf(g: f64, n: u32) -> f64 {
    cs::run_length_pmf(g, n)
}

#[pyfunction]
fn expected_run_length(g: f64) -> f64 {
    cs::expected_run_length(g)
}

#[pyfunction]
fn odd_parity_probability(g: f64) -> f64 {
    cs::odd_parity_probability(g)
}

#[pyfunction]
fn half_normal_tail(x: f64) -> PyResult<f64> {
    cs::half_normal_tail(x).map_err(value_error)
}

/// Fresh uniforms per sample over `n` samples, as a dict.
#[pyfunction]
#[pyo3(signature = (kind, n = 100_000, seed = 0, recycling = None))]
fn measure_consumption<'py>(
    py: Python<'py>,
    kind: &str,
    n: usize,
    seed: u64,
    recycling: Option<bool>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = cs::SamplerConfig::new(parse_kind(kind)?).map_err(value_error)?;
    if let Some(on) = recycling {
        config = config.recycling(on);
    }
    let r = py.detach(|| cs::measure_consumption(&config, n, seed)).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("sampler", r.sampler_kind)?;
    d.set_item("n", r.samples)?;
    d.set_item("uniforms", r.uniforms)?;
    d.set_item("mean", r.mean_per_sample)?;
    d.set_item("ci95", r.ci95_halfwidth)?;
    Ok(d)
}

/// One-sample KS test against `"exponential"`, `"normal"` or `"uniform"`.
#[pyfunction]
#[pyo3(signature = (samples, target, alpha = 0.01))]
fn ks_test<'py>(py: Python<'py>, samples: Vec<f64>, target: &str, alpha: f64) -> PyResult<Bound<'py, PyDict>> {
    let cdf: fn(f64) -> f64 = match target {
        "exponential" => cs::samplers::exponential_cdf,
        "normal" => cs::special::standard_normal_cdf,
        "uniform" => |x: f64| x.clamp(0.0, 1.0),
        other => return Err(PyValueError::new_err(format!("unknown target {other:?}"))),
    };
    let r = stats::ks_test(&stats::sorted(samples), cdf, alpha).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("statistic", r.statistic)?;
    d.set_item("critical_value", r.critical_value)?;
    d.set_item("n", r.n)?;
    d.set_item("passed", r.passed)?;
    Ok(d)
}

/// Names accepted by `Sampler`.
#[pyfunction]
fn sampler_kinds() -> Vec<&'static str> {
    cs::SamplerKind::ALL.iter().map(|k| k.name()).collect()
}

#[pymodule]
#[pyo3(name = "comparison_sampling")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyUniformSource>()?;
    m.add_class::<PyIntervalTable>()?;
    m.add_class::<PySampler>()?;
    m.add_class::<PyNormalPool>()?;
    m.add_function(wrap_pyfunction!(run_test, m)?)?;
    m.add_function(wrap_pyfunction!(run_length_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(expected_run_length, m)?)?;
    m.add_function(wrap_pyfunction!(odd_parity_probability, m)?)?;
    m.add_function(wrap_pyfunction!(half_normal_tail, m)?)?;
    m.add_function(wrap_pyfunction!(measure_consumption, m)?)?;
    m.add_function(wrap_pyfunction!(ks_test, m)?)?;
    m.add_function(wrap_pyfunction!(sampler_kinds, m)?)?;
    Ok(())
}
