//! Python bindings: walk generators, limit-set estimation, balancing,
//! RP certification and the rearranger.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use serwalk::analysis::{self, DichotomyVerdict, EstimateParams, SingletonVerdict};
use serwalk::io::{read_trace_csv, read_trace_jsonl, write_trace_csv, write_trace_jsonl, TraceVector};
use serwalk::rearrange::{self, BalanceStrategy, RearrangeParams};
use serwalk::series::{self, SeriesPrefix};
use serwalk::{generators, metric, seqspace, Error, NormKind, Point, PointSample, SparseVec, Vector};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotChainable { .. }
        | Error::ExtensionFailed { .. }
        | Error::RpBoundViolated { .. }
        | Error::RpCertificationFailed(_)
        | Error::PrefixTooShort
        | Error::SampleTooSparse { .. }
        | Error::Stage { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn norm_kind(s: &str) -> PyResult<NormKind> {
    s.parse().map_err(|_| PyValueError::new_err(format!("unknown norm {s:?}")))
}

fn points(rows: &[Vec<f64>]) -> Vec<Point> {
    rows.iter().map(|r| Point::float(r)).collect()
}

fn sparse_dict(v: &SparseVec) -> BTreeMap<usize, f64> {
    v.iter().map(|(i, x)| (i, x.to_f64())).collect()
}

enum AnyWalk {
    Points(serwalk::Walk<Point>),
    Sparse(serwalk::Walk<SparseVec>),
}

/// Applies `$body` to the inner walk whichever its vector type.
macro_rules! with_walk {
    ($w:expr, $inner:ident => $body:expr) => {
        match $w {
            AnyWalk::Points($inner) => $body,
            AnyWalk::Sparse($inner) => $body,
        }
    };
}

/// A finite walk: partial sums grouped into phases.
#[pyclass(name = "Walk", module = "serwalk_py", frozen)]
struct PyWalk {
    inner: AnyWalk,
}

#[pymethods]
impl PyWalk {
    fn __len__(&self) -> usize {
        with_walk!(&self.inner, w => w.len())
    }

    #[getter]
    fn phase_count(&self) -> usize {
        with_walk!(&self.inner, w => w.phase_count())
    }

    #[getter]
    fn palindromic(&self) -> bool {
        with_walk!(&self.inner, w => w.palindromic)
    }

    #[getter]
    fn is_exact(&self) -> bool {
        with_walk!(&self.inner, w => w.is_exact())
    }

    #[getter]
    fn is_sparse(&self) -> bool {
        matches!(self.inner, AnyWalk::Sparse(_))
    }

    /// Phase (1-based) of sum `i`.
    fn phase_of(&self, i: usize) -> PyResult<usize> {
        if i >= self.__len__() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(with_walk!(&self.inner, w => w.phase_of(i)))
    }

    /// Dense coordinates of each sum (planar and other point walks).
    fn points(&self) -> PyResult<Vec<Vec<f64>>> {
        match &self.inner {
            AnyWalk::Points(w) => Ok(w.sums.iter().map(Point::to_f64s).collect()),
            AnyWalk::Sparse(_) => Err(PyValueError::new_err("sequence-space walk; use entries()")),
        }
    }

    /// `{index: value}` dictionaries of each sum (sequence-space walks).
    fn entries(&self) -> PyResult<Vec<BTreeMap<usize, f64>>> {
        match &self.inner {
            AnyWalk::Sparse(w) => Ok(w.sums.iter().map(sparse_dict).collect()),
            AnyWalk::Points(_) => Err(PyValueError::new_err("point walk; use points()")),
        }
    }

    fn to_csv(&self) -> PyResult<String> {
        let AnyWalk::Points(w) = &self.inner else {
            return Err(PyValueError::new_err("sequence-space walks serialize as JSON lines"));
        };
        let mut buf = Vec::new();
        write_trace_csv(w, &mut buf).map_err(to_py)?;
        Ok(String::from_utf8(buf).expect("utf-8"))
    }

    fn to_jsonl(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        with_walk!(&self.inner, w => write_trace_jsonl(w, &mut buf)).map_err(to_py)?;
        Ok(String::from_utf8(buf).expect("utf-8"))
    }

    #[pyo3(signature = (window = 0.3, resolution = 0.1, min_hits = 2))]
    fn estimate(&self, window: f64, resolution: f64, min_hits: usize) -> PyResult<PyEstimate> {
        let params = EstimateParams::new(window, resolution).min_hits(min_hits);
        Ok(match &self.inner {
            AnyWalk::Points(w) => PyEstimate::from_estimate(analysis::estimate_with(w, &params).map_err(to_py)?),
            AnyWalk::Sparse(w) => PyEstimate::from_estimate(analysis::estimate_with(w, &params).map_err(to_py)?),
        })
    }

    /// `(verdict, point)` where verdict is converges-to,
    /// diverges-with-singleton or not-singleton.
    fn singleton_check(&self, tol: f64) -> PyResult<(String, Option<Vec<f64>>)> {
        fn flatten<V: Vector>(v: SingletonVerdict<V>) -> (String, Option<Vec<f64>>) {
            let name = v.as_str().to_string();
            match v {
                SingletonVerdict::ConvergesTo(p) | SingletonVerdict::DivergesWithSingleton(p) => {
                    (name, Some(p.to_dense(p.dense_len())))
                }
                SingletonVerdict::NotSingleton(_) => (name, None),
            }
        }
        Ok(with_walk!(&self.inner, w => flatten(analysis::singleton_convergence_check(w, tol).map_err(to_py)?)))
    }

    /// Largest distance between sums in the last `tail_fraction` of the walk.
    #[pyo3(signature = (tail_fraction = 0.25))]
    fn cauchy_gap(&self, tail_fraction: f64) -> PyResult<f64> {
        Ok(with_walk!(&self.inner, w => analysis::cauchy_diagnostic(w, tail_fraction).map_err(to_py)?.max_gap))
    }

    fn __repr__(&self) -> String {
        format!("Walk(len={}, phases={}, sparse={})", self.__len__(), self.phase_count(), self.is_sparse())
    }
}

/// Cluster points of a walk's late window. Sparse points are dense lists
/// over the coordinates `1..=max support`.
#[pyclass(name = "LimitEstimate", module = "serwalk_py", frozen)]
struct PyEstimate {
    #[pyo3(get)]
    points: Vec<Vec<f64>>,
    #[pyo3(get)]
    hit_counts: Vec<usize>,
    #[pyo3(get)]
    window: (usize, usize),
    #[pyo3(get)]
    resolution: f64,
    max_norm: f64,
    /// The typed estimate, kept for `dichotomy`.
    raw: AnyEstimate,
}

enum AnyEstimate {
    Points(analysis::LimitEstimate<Point>),
    Sparse(analysis::LimitEstimate<SparseVec>),
}

impl PyEstimate {
    fn from_estimate<V: TraceVector>(est: analysis::LimitEstimate<V>) -> Self
    where
        AnyEstimate: From<analysis::LimitEstimate<V>>,
    {
        let dim = est.points.iter().map(|p| p.dense_len()).max().unwrap_or(0);
        PyEstimate {
            points: est.points.iter().map(|p| p.to_dense(dim)).collect(),
            hit_counts: est.hit_counts.clone(),
            window: est.window,
            resolution: est.resolution,
            max_norm: est.max_norm(),
            raw: est.into(),
        }
    }
}

impl From<analysis::LimitEstimate<Point>> for AnyEstimate {
    fn from(e: analysis::LimitEstimate<Point>) -> Self {
        AnyEstimate::Points(e)
    }
}

impl From<analysis::LimitEstimate<SparseVec>> for AnyEstimate {
    fn from(e: analysis::LimitEstimate<SparseVec>) -> Self {
        AnyEstimate::Sparse(e)
    }
}

#[pymethods]
impl PyEstimate {
    fn __len__(&self) -> usize {
        self.points.len()
    }

    #[getter]
    fn max_norm(&self) -> f64 {
        self.max_norm
    }

    /// compact-connected, all-components-escape or violation. `bound`
    /// defaults to the estimate's largest norm.
    #[pyo3(signature = (gap, bound = None))]
    fn dichotomy(&self, gap: f64, bound: Option<f64>) -> PyResult<String> {
        let bound = bound.unwrap_or(self.max_norm);
        let v: DichotomyVerdict = match &self.raw {
            AnyEstimate::Points(e) => analysis::verify_dichotomy(e, gap, bound),
            AnyEstimate::Sparse(e) => analysis::verify_dichotomy(e, gap, bound),
        }
        .map_err(to_py)?
        .verdict;
        Ok(v.as_str().to_string())
    }
}

/// A finite series prefix in R^m.
#[pyclass(name = "SeriesPrefix", module = "serwalk_py", frozen)]
struct PySeries {
    inner: SeriesPrefix,
}

#[pymethods]
impl PySeries {
    #[new]
    #[pyo3(signature = (rows, norm = "euclidean"))]
    fn new(rows: Vec<Vec<f64>>, norm: &str) -> PyResult<Self> {
        let inner = SeriesPrefix::from_vectors(&points(&rows), norm_kind(norm)?).map_err(to_py)?;
        Ok(PySeries { inner })
    }

    /// The interleaved signed family with sum range R^m.
    #[staticmethod]
    fn full_sum_range(m: usize, n: usize, p: f64) -> PyResult<Self> {
        Ok(PySeries { inner: series::full_sum_range_family(m, n, p).map_err(to_py)? })
    }

    #[staticmethod]
    fn alternating_harmonic(n: usize) -> Self {
        PySeries { inner: series::alternating_harmonic(n) }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Term `x_n`, 1-based.
    fn term(&self, n: usize) -> PyResult<Vec<f64>> {
        if n == 0 || n > self.inner.len() {
            return Err(PyValueError::new_err("term index out of range"));
        }
        Ok(self.inner.term(n).to_vec())
    }

    /// `(N, delta)` after stress-testing `budget` instances.
    #[pyo3(signature = (epsilon, budget = 500, seed = 0))]
    fn certify_rp(&self, epsilon: f64, budget: usize, seed: u64) -> PyResult<(usize, f64)> {
        let w = rearrange::certify_rp(&self.inner, epsilon, budget, seed).map_err(to_py)?;
        Ok((w.n_threshold, w.delta))
    }

    /// Runs the rearranger toward `target`; returns `(tau, walk, report_json)`.
    #[pyo3(signature = (target, stages, rp_budget = 100, seed = 0, link_gap = None))]
    fn rearrange(
        &self,
        py: Python<'_>,
        target: Vec<Vec<f64>>,
        stages: usize,
        rp_budget: usize,
        seed: u64,
        link_gap: Option<f64>,
    ) -> PyResult<(Vec<usize>, PyWalk, String)> {
        let sample = PointSample::new(points(&target), "target");
        let params = RearrangeParams { rp_budget, seed, link_gap };
        let series = &self.inner;
        let run = py
            .detach(|| rearrange::rearrange_to_limit_set(series, &sample, stages, &params))
            .map_err(to_py)?;
        let report = run.report.to_json().map_err(to_py)?;
        Ok((run.tau.images().to_vec(), PyWalk { inner: AnyWalk::Points(run.walk) }, report))
    }
}

fn point_walk(r: serwalk::Result<serwalk::Walk<Point>>) -> PyResult<PyWalk> {
    Ok(PyWalk { inner: AnyWalk::Points(r.map_err(to_py)?) })
}

fn sparse_walk(r: serwalk::Result<serwalk::Walk<SparseVec>>) -> PyResult<PyWalk> {
    Ok(PyWalk { inner: AnyWalk::Sparse(r.map_err(to_py)?) })
}

#[pyfunction]
fn gen_two_lines(phases: usize) -> PyResult<PyWalk> {
    point_walk(generators::gen_two_lines(phases))
}

#[pyfunction]
fn gen_halflines(abscissae: Vec<f64>, phases: usize) -> PyResult<PyWalk> {
    point_walk(generators::gen_halflines(&abscissae, phases))
}

#[pyfunction]
fn cantor_abscissae(n: usize) -> Vec<f64> {
    generators::cantor_abscissae(n)
}

#[pyfunction]
#[pyo3(signature = (dense, phases, norm = "euclidean"))]
fn build_chainable_walk(dense: Vec<Vec<f64>>, phases: usize, norm: &str) -> PyResult<PyWalk> {
    point_walk(generators::build_chainable_walk(&points(&dense), phases, norm_kind(norm)?))
}

#[pyfunction]
fn build_unbounded_components_walk(components: Vec<Vec<Vec<f64>>>, radii: Vec<f64>, phases: usize) -> PyResult<PyWalk> {
    let comps: Vec<Vec<Point>> = components.iter().map(|c| points(c)).collect();
    point_walk(generators::build_unbounded_components_walk(&comps, &radii, phases))
}

#[pyfunction]
fn gen_c0_two_point(phases: usize) -> PyResult<PyWalk> {
    sparse_walk(seqspace::gen_c0_two_point(phases))
}

#[pyfunction]
fn gen_c0_singleton_divergent(phases: usize) -> PyResult<PyWalk> {
    sparse_walk(seqspace::gen_c0_singleton_divergent(phases))
}

/// Parses a CSV or JSON-lines trace.
#[pyfunction]
fn read_trace(text: &str) -> PyResult<PyWalk> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with('{') {
        if first.contains("\"entries\"") {
            sparse_walk(read_trace_jsonl(text.as_bytes(), NormKind::Sup))
        } else {
            point_walk(read_trace_jsonl(text.as_bytes(), NormKind::Euclidean))
        }
    } else {
        point_walk(read_trace_csv(text.as_bytes(), NormKind::Euclidean))
    }
}

#[pyfunction]
#[pyo3(signature = (a, b, norm = "euclidean"))]
fn hausdorff_distance(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, norm: &str) -> PyResult<f64> {
    metric::hausdorff_distance(&points(&a), &points(&b), norm_kind(norm)?).map_err(to_py)
}

/// Blocks of indices connected by steps of length ≤ gap.
#[pyfunction]
#[pyo3(signature = (sample, gap, norm = "euclidean"))]
fn gap_components(sample: Vec<Vec<f64>>, gap: f64, norm: &str) -> PyResult<Vec<Vec<usize>>> {
    Ok(metric::gap_components(&points(&sample), gap, norm_kind(norm)?))
}

/// A 1-based ordering with every prefix sum of norm `< bound`, or None.
#[pyfunction]
#[pyo3(signature = (rows, bound, norm = "sup", strategy = "auto"))]
fn find_balanced_permutation(rows: Vec<Vec<f64>>, bound: f64, norm: &str, strategy: &str) -> PyResult<Option<Vec<usize>>> {
    let strategy: BalanceStrategy = strategy
        .parse()
        .map_err(|_| PyValueError::new_err(format!("unknown strategy {strategy:?}")))?;
    rearrange::find_balanced_permutation(&points(&rows), bound, strategy, norm_kind(norm)?).map_err(to_py)
}

/// Exhaustive check of the sign-pattern family; returns
/// `(passed, permutations_checked, min_half_sum_norm)`.
#[pyfunction]
fn check_vector_family(k: usize) -> PyResult<(bool, usize, f64)> {
    let fam = seqspace::gen_vector_family(k).map_err(to_py)?;
    let r = seqspace::check_family_exhaustive(&fam).map_err(to_py)?;
    Ok((r.passed(), r.permutations_checked, r.min_half_sum_norm))
}

/// Dense rows of the positive copies in block `k` of the no-RP series.
#[pyfunction]
fn no_rp_block(k: usize) -> PyResult<Vec<Vec<f64>>> {
    let block = seqspace::no_rp_block(k).map_err(to_py)?;
    let dim = block.iter().map(|v| v.dense_len()).max().unwrap_or(0);
    Ok(block.iter().map(|v| v.to_dense(dim)).collect())
}

#[pymodule]
fn serwalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWalk>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PySeries>()?;
    m.add_function(wrap_pyfunction!(gen_two_lines, m)?)?;
    m.add_function(wrap_pyfunction!(gen_halflines, m)?)?;
    m.add_function(wrap_pyfunction!(cantor_abscissae, m)?)?;
    m.add_function(wrap_pyfunction!(build_chainable_walk, m)?)?;
    m.add_function(wrap_pyfunction!(build_unbounded_components_walk, m)?)?;
    m.add_function(wrap_pyfunction!(gen_c0_two_point, m)?)?;
    m.add_function(wrap_pyfunction!(gen_c0_singleton_divergent, m)?)?;
    m.add_function(wrap_pyfunction!(read_trace, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff_distance, m)?)?;
    m.add_function(wrap_pyfunction!(gap_components, m)?)?;
    m.add_function(wrap_pyfunction!(find_balanced_permutation, m)?)?;
    m.add_function(wrap_pyfunction!(check_vector_family, m)?)?;
    m.add_function(wrap_pyfunction!(no_rp_block, m)?)?;
    Ok(())
}
