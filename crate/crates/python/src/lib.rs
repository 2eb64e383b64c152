//! Python bindings: `import infostream_py`.
//!
//! Series are plain lists of floats; documents are `(id, date, text)` tuples
//! with ISO dates; subtopic queries are dicts `name -> [keywords]` (insertion
//! order is kept).

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use infostream::corpus::parse_day;
use infostream::mfdfa::{self, q_range, MfdfaError, Validity};
use infostream::{
    build_decomposition, contribution_coefficients, CascadeSpec, Document, DocumentSet, MfdfaConfig,
    MultifractalSpectrum, SubtopicQuery, SubtopicSpectrum,
};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn mfdfa_err(e: MfdfaError) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        value_err(e)
    }
}

#[allow(clippy::too_many_arguments)]
fn config(
    q_min: f64,
    q_max: f64,
    q_step: f64,
    scales: Option<Vec<usize>>,
    detrend_order: usize,
    min_length: usize,
    max_zero_fraction: f64,
) -> PyResult<MfdfaConfig> {
    let cfg = MfdfaConfig {
        q_grid: q_range(q_min, q_max, q_step).map_err(mfdfa_err)?,
        scales,
        detrend_order,
        min_length,
        max_zero_fraction,
    };
    cfg.validate().map_err(mfdfa_err)?;
    Ok(cfg)
}

/// Singularity spectrum of one series.
#[pyclass(name = "Spectrum", module = "infostream_py", frozen, from_py_object)]
#[derive(Clone)]
struct PySpectrum {
    inner: MultifractalSpectrum,
}

#[pymethods]
impl PySpectrum {
    #[getter]
    fn q(&self) -> Vec<f64> {
        self.inner.q.clone()
    }
    #[getter]
    fn h(&self) -> Vec<f64> {
        self.inner.h.clone()
    }
    #[getter]
    fn tau(&self) -> Vec<f64> {
        self.inner.tau.clone()
    }
    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha.clone()
    }
    #[getter]
    fn f(&self) -> Vec<f64> {
        self.inner.f.clone()
    }
    #[getter]
    fn fit_residual(&self) -> Vec<f64> {
        self.inner.fit_residual.clone()
    }
    #[getter]
    fn scales(&self) -> Vec<usize> {
        self.inner.scales.clone()
    }
    /// `max(alpha) - min(alpha)`.
    #[getter]
    fn width(&self) -> f64 {
        self.inner.width()
    }
    fn hurst_at(&self, q: f64) -> Option<f64> {
        self.inner.hurst_at(q)
    }
    fn __len__(&self) -> usize {
        self.inner.q.len()
    }
    fn __repr__(&self) -> String {
        format!("Spectrum(points={}, width={:.4})", self.inner.q.len(), self.inner.width())
    }
}

#[pyfunction]
#[pyo3(signature = (series, *, q_min=-5.0, q_max=5.0, q_step=0.5, scales=None, detrend_order=1, min_length=128, max_zero_fraction=0.5))]
#[allow(clippy::too_many_arguments)]
fn spectrum(
    py: Python<'_>,
    series: Vec<f64>,
    q_min: f64,
    q_max: f64,
    q_step: f64,
    scales: Option<Vec<usize>>,
    detrend_order: usize,
    min_length: usize,
    max_zero_fraction: f64,
) -> PyResult<PySpectrum> {
    let cfg = config(q_min, q_max, q_step, scales, detrend_order, min_length, max_zero_fraction)?;
    let inner = py.detach(|| mfdfa::spectrum(&series, &cfg)).map_err(mfdfa_err)?;
    Ok(PySpectrum { inner })
}

/// `None` when the series can be analysed, otherwise the reason it cannot.
#[pyfunction]
#[pyo3(signature = (series, *, min_length=128, max_zero_fraction=0.5))]
fn validity_check(series: Vec<f64>, min_length: usize, max_zero_fraction: f64) -> Option<String> {
    let cfg = MfdfaConfig { min_length, max_zero_fraction, ..MfdfaConfig::default() };
    match mfdfa::validity_check(&series, &cfg) {
        Validity::Ok => None,
        Validity::InsufficientData(reason) => Some(reason.to_string()),
    }
}

#[pyfunction]
fn profile(series: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(mfdfa::profile(&series).map_err(mfdfa_err)?.values().to_vec())
}

#[pyfunction]
fn spectrum_distance(a: &PySpectrum, b: &PySpectrum) -> PyResult<f64> {
    infostream::spectrum_distance(&a.inner, &b.inner).map_err(value_err)
}

/// Rank subtopics by distance to `main`. `None` marks a subtopic without a
/// valid spectrum. Returns `(topic, distance or None, valid)` rows.
#[pyfunction]
fn rank_subtopics(main: &PySpectrum, subtopics: Vec<(String, Option<PySpectrum>)>) -> PyResult<Vec<(String, Option<f64>, bool)>> {
    let subs: Vec<(String, SubtopicSpectrum)> = subtopics
        .into_iter()
        .map(|(name, s)| {
            let s = match s {
                Some(s) => SubtopicSpectrum::Valid(s.inner),
                None => SubtopicSpectrum::Invalid(infostream::InsufficientData::Constant),
            };
            (name, s)
        })
        .collect();
    let table = infostream::rank_subtopics(&main.inner, subs.iter().map(|(n, s)| (n.as_str(), s))).map_err(value_err)?;
    Ok(table.rows.into_iter().map(|r| (r.topic, r.distance, r.valid)).collect())
}

/// Accepts a dict `name -> [keywords]` or a sequence of `(name, [keywords])`.
fn queries(topics: &Bound<'_, PyAny>) -> PyResult<Vec<SubtopicQuery>> {
    let pairs: Vec<(String, Vec<String>)> = match topics.cast::<PyDict>() {
        Ok(d) => d.iter().map(|(k, v)| Ok((k.extract()?, v.extract()?))).collect::<PyResult<_>>()?,
        Err(_) => topics.extract()?,
    };
    Ok(pairs.into_iter().map(|(name, kw)| SubtopicQuery::new(name, kw)).collect())
}

/// Names of the subtopics whose keywords occur in `text`, sorted.
#[pyfunction]
fn match_subtopics(text: &str, topics: &Bound<'_, PyAny>) -> PyResult<Vec<String>> {
    Ok(infostream::match_subtopics(text, &queries(topics)?).into_iter().collect())
}

#[pyclass(name = "Decomposition", module = "infostream_py", frozen, get_all)]
struct PyDecomposition {
    /// ISO dates, one per day of the range.
    days: Vec<String>,
    main: Vec<u64>,
    other: Vec<u64>,
    duplicates: Vec<u64>,
    /// `(name, daily counts)` in query order.
    subtopics: Vec<(String, Vec<u64>)>,
    total_docs: u64,
    /// `(name, documents, fraction)`, largest first.
    coefficients: Vec<(String, u64, f64)>,
}

#[pymethods]
impl PyDecomposition {
    fn __repr__(&self) -> String {
        format!("Decomposition(days={}, documents={}, subtopics={})", self.days.len(), self.total_docs, self.subtopics.len())
    }
}

#[pyfunction]
fn decompose(py: Python<'_>, documents: Vec<(String, String, String)>, topics: &Bound<'_, PyAny>) -> PyResult<PyDecomposition> {
    let queries = queries(topics)?;
    let docs = documents
        .into_iter()
        .enumerate()
        .map(|(i, (id, date, text))| {
            let date = parse_day(&date).ok_or_else(|| value_err(format!("document {i}: invalid date {date:?}")))?;
            Ok(Document { id, date, text })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let corpus = DocumentSet::from_documents(docs).map_err(value_err)?;
    let result = py.detach(|| build_decomposition(&corpus, &queries)).map_err(value_err)?;
    let coefficients = contribution_coefficients(&result).map_err(value_err)?;
    Ok(PyDecomposition {
        days: result.range.iter().map(|d| d.to_string()).collect(),
        main: result.main.values.clone(),
        other: result.other.values.clone(),
        duplicates: result.duplicates.values.clone(),
        subtopics: result.subtopics.iter().map(|s| (s.name.clone(), s.series.values.clone())).collect(),
        total_docs: result.total_docs,
        coefficients: coefficients.into_iter().map(|c| (c.name, c.docs, c.fraction)).collect(),
    })
}

#[pyfunction]
fn binomial_cascade(a: f64, levels: u32) -> PyResult<Vec<f64>> {
    Ok(infostream::binomial_cascade(CascadeSpec::new(a, levels).map_err(value_err)?))
}

#[pyfunction]
fn analytic_hurst_binomial(q: f64, a: f64) -> PyResult<f64> {
    infostream::analytic_hurst_binomial(q, a).map_err(value_err)
}

#[pyfunction]
fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    infostream::white_noise(n, seed)
}

#[pyfunction]
fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    infostream::random_walk(n, seed)
}

#[pymodule]
fn infostream_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyDecomposition>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(validity_check, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_distance, m)?)?;
    m.add_function(wrap_pyfunction!(rank_subtopics, m)?)?;
    m.add_function(wrap_pyfunction!(match_subtopics, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_cascade, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_hurst_binomial, m)?)?;
    m.add_function(wrap_pyfunction!(white_noise, m)?)?;
    m.add_function(wrap_pyfunction!(random_walk, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyModule>)>(f: F) {
        Python::attach(|py| {
            let m = PyModule::new(py, "infostream_py").unwrap();
            infostream_py(&m).unwrap();
            f(py, &m);
        });
    }

    #[test]
    fn spectrum_from_python() {
        with_module(|py, m| {
            let locals = PyDict::new(py);
            locals.set_item("m", m).unwrap();
            py.run(
                c"x = m.binomial_cascade(0.75, 12)\ns = m.spectrum(x)\nh2 = s.hurst_at(2.0)\nw = s.width\nd = m.spectrum_distance(s, s)",
                None,
                Some(&locals),
            )
            .unwrap();
            let h2: f64 = locals.get_item("h2").unwrap().unwrap().extract().unwrap();
            let d: f64 = locals.get_item("d").unwrap().unwrap().extract().unwrap();
            assert!((h2 - 0.839).abs() < 0.06);
            assert_eq!(d, 0.0);
        });
    }

    #[test]
    fn errors_map_to_python_exceptions() {
        with_module(|py, m| {
            let err = m.getattr("spectrum").unwrap().call1((vec![0.0f64; 300],)).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
            let err = m.getattr("binomial_cascade").unwrap().call1((0.3, 10)).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn decompose_from_python() {
        with_module(|py, m| {
            let locals = PyDict::new(py);
            locals.set_item("m", m).unwrap();
            py.run(
                c"docs = [('1', '2016-06-23', 'Election vote'), ('2', '2016-06-24', 'pound falls after vote'), ('3', '2016-06-24', 'weather')]
r = m.decompose(docs, {'vote': ['vote'], 'pound': ['pound']})
ok = (r.main == [1, 2] and r.duplicates == [0, 1] and r.other == [0, 1] and r.total_docs == 3
      and r.coefficients[0] == ('vote', 2, 2/3) and m.match_subtopics('The Pound!', [('p', ['pound'])]) == ['p'])",
                None,
                Some(&locals),
            )
            .unwrap();
            assert!(locals.get_item("ok").unwrap().unwrap().extract::<bool>().unwrap());
        });
    }
}
