//! Python bindings for the `mddgen` core crate.
//!
//! N-gram records cross the boundary as `(tokens, count, is_start, is_end)`
//! tuples; everything else is wrapped in a class.

use std::path::PathBuf;

use num_bigint::BigUint;
use pyo3::exceptions::{PyIOError, PyMemoryError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mddgen::compile::{compile_with, CompileOptions, CompileStats};
use mddgen::curation::{ppl_from_probability, rank as rank_sentences, ScoredSentence};
use mddgen::model::{join_tokens, validate_sentence};
use mddgen::pipeline::{self, PipelineConfig};
use mddgen::{Error, NgramRecord, RadnerVariant};

type RecordTuple = (Vec<String>, u64, bool, bool);

fn to_py(err: Error) -> PyErr {
    match err {
        Error::StateLimit { .. } => PyMemoryError::new_err(err.to_string()),
        Error::FileIo { .. } | Error::Io(_) => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_records(records: Vec<RecordTuple>) -> Vec<NgramRecord> {
    records
        .into_iter()
        .map(|(tokens, count, is_start, is_end)| NgramRecord {
            tokens,
            count,
            is_start,
            is_end,
        })
        .collect()
}

fn from_records(records: Vec<NgramRecord>) -> Vec<RecordTuple> {
    records
        .into_iter()
        .map(|r| (r.tokens, r.count, r.is_start, r.is_end))
        .collect()
}

#[pyclass(name = "Lexicon", module = "mddgen_py", skip_from_py_object)]
#[derive(Clone)]
struct PyLexicon {
    inner: mddgen::Lexicon,
}

#[pymethods]
impl PyLexicon {
    /// Without `words` every token is allowed.
    #[new]
    #[pyo3(signature = (words=None))]
    fn new(words: Option<Vec<String>>) -> Self {
        let inner = match words {
            Some(w) => mddgen::Lexicon::from_words("python", w),
            None => mddgen::Lexicon::permissive("python"),
        };
        PyLexicon { inner }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyLexicon {
            inner: mddgen::Lexicon::load_wordlist(path).map_err(to_py)?,
        })
    }

    fn add_override(&mut self, token: String, syllables: u32) -> PyResult<()> {
        let lex = std::mem::replace(&mut self.inner, mddgen::Lexicon::permissive(""));
        self.inner = lex.with_override(token, syllables).map_err(to_py)?;
        Ok(())
    }

    fn load_overrides(&mut self, path: PathBuf) -> PyResult<()> {
        let lex = std::mem::replace(&mut self.inner, mddgen::Lexicon::permissive(""));
        self.inner = lex.load_overrides(path).map_err(to_py)?;
        Ok(())
    }

    fn is_allowed(&self, token: &str) -> bool {
        self.inner.is_allowed(token)
    }

    fn char_count(&self, token: &str) -> u32 {
        self.inner.char_count(token)
    }

    fn syllable_count(&self, token: &str) -> u32 {
        self.inner.syllable_count(token)
    }
}

#[pyclass(name = "NgramIndex", module = "mddgen_py")]
struct PyNgramIndex {
    inner: mddgen::NgramIndex,
    records: Vec<NgramRecord>,
}

#[pymethods]
impl PyNgramIndex {
    #[new]
    fn new(records: Vec<RecordTuple>) -> PyResult<Self> {
        let records = to_records(records);
        let inner = mddgen::NgramIndex::build(&records).map_err(to_py)?;
        Ok(PyNgramIndex { inner, records })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn successors(&self, context: Vec<String>) -> PyResult<Vec<String>> {
        Ok(self.inner.successors(&context).map_err(to_py)?.into_iter().collect())
    }

    fn __contains__(&self, ngram: Vec<String>) -> bool {
        self.inner.contains(&ngram)
    }

    fn records(&self) -> Vec<RecordTuple> {
        from_records(self.records.clone())
    }
}

#[pyclass(name = "ConstraintModel", module = "mddgen_py", skip_from_py_object)]
#[derive(Clone)]
struct PyConstraintModel {
    inner: mddgen::ConstraintModel,
}

#[pymethods]
impl PyConstraintModel {
    #[staticmethod]
    #[pyo3(signature = (variant="core", order=None))]
    fn radner(variant: &str, order: Option<usize>) -> PyResult<Self> {
        let v: RadnerVariant = variant.parse().map_err(to_py)?;
        let mut inner = mddgen::ConstraintModel::radner(v);
        if let Some(k) = order {
            inner = inner.with_chaining_order(k);
        }
        Ok(PyConstraintModel { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyConstraintModel {
            inner: mddgen::ConstraintModel::parse(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn variables(&self) -> usize {
        self.inner.variables
    }

    #[getter]
    fn chaining_order(&self) -> usize {
        self.inner.chaining_order
    }

    /// Schema problems; empty when the model is well formed.
    fn errors(&self) -> Vec<String> {
        self.inner.validate()
    }

    /// `(overall, [(name, passed, measured), ...])`
    fn check(
        &self,
        tokens: Vec<String>,
        index: &PyNgramIndex,
        lexicon: &PyLexicon,
    ) -> (bool, Vec<(String, bool, String)>) {
        let report = validate_sentence(&self.inner, &tokens, &index.inner, &lexicon.inner);
        let checks = report
            .checks
            .into_iter()
            .map(|c| (c.name, c.passed, c.measured))
            .collect();
        (report.overall, checks)
    }
}

#[pyclass(name = "Mdd", module = "mddgen_py", skip_from_py_object)]
#[derive(Clone)]
struct PyMdd {
    inner: mddgen::Mdd,
}

#[pymethods]
impl PyMdd {
    /// Cost-free diagram whose paths are exactly `tuples`.
    #[staticmethod]
    fn from_tuples(layers: usize, tuples: Vec<Vec<String>>) -> PyResult<Self> {
        Ok(PyMdd {
            inner: mddgen::Mdd::from_label_tuples(layers, &tuples).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(text: &str) -> PyResult<Self> {
        Ok(PyMdd {
            inner: mddgen::Mdd::load(text).map_err(to_py)?,
        })
    }

    fn dump(&self) -> String {
        self.inner.dump()
    }

    #[getter]
    fn layer_count(&self) -> usize {
        self.inner.layer_count()
    }

    fn layer_widths(&self) -> Vec<usize> {
        self.inner.layer_widths()
    }

    fn layer_labels(&self, layer: usize) -> PyResult<Vec<String>> {
        if layer >= self.inner.layer_count() {
            return Err(PyValueError::new_err(format!("no layer {layer}")));
        }
        Ok(self.inner.layer_labels(layer).into_iter().map(str::to_owned).collect())
    }

    fn count_solutions(&self) -> BigUint {
        self.inner.count_solutions()
    }

    fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    #[pyo3(signature = (limit=None))]
    fn sentences(&self, limit: Option<usize>) -> Vec<Vec<String>> {
        self.inner
            .enumerate_paths(limit)
            .into_iter()
            .map(|(tokens, _)| tokens)
            .collect()
    }

    /// Paths with their cost vectors.
    #[pyo3(signature = (limit=None))]
    fn paths(&self, limit: Option<usize>) -> Vec<(Vec<String>, Vec<i64>)> {
        self.inner
            .enumerate_paths(limit)
            .into_iter()
            .map(|(tokens, cost)| (tokens, cost.components().to_vec()))
            .collect()
    }

    fn __contains__(&self, tuple: Vec<String>) -> bool {
        self.inner.contains(&tuple)
    }

    fn intersect(&self, other: &PyMdd) -> PyResult<PyMdd> {
        Ok(PyMdd {
            inner: self.inner.intersect(&other.inner).map_err(to_py)?,
        })
    }

    fn __eq__(&self, other: &PyMdd) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Mdd(layers={}, nodes={}, arcs={}, solutions={})",
            self.inner.layer_count(),
            self.inner.node_count(),
            self.inner.arc_count(),
            self.inner.count_solutions()
        )
    }
}

#[pyclass(name = "NgramLanguageModel", module = "mddgen_py")]
struct PyLanguageModel {
    inner: mddgen::NgramLanguageModel,
}

#[pymethods]
impl PyLanguageModel {
    #[new]
    #[pyo3(signature = (records, k_add=1.0))]
    fn new(records: Vec<RecordTuple>, k_add: f64) -> PyResult<Self> {
        Ok(PyLanguageModel {
            inner: mddgen::NgramLanguageModel::train(&to_records(records), k_add).map_err(to_py)?,
        })
    }

    fn perplexity(&self, tokens: Vec<String>) -> f64 {
        self.inner.perplexity(&tokens)
    }

    fn conditional(&self, context: Vec<String>, word: &str) -> f64 {
        self.inner.conditional(&context, word)
    }
}

fn stats_dict<'py>(py: Python<'py>, stats: &CompileStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("layer_nodes", stats.layer_nodes.clone())?;
    d.set_item("layer_arcs", stats.layer_arcs.clone())?;
    d.set_item("raw_states", stats.raw_states.clone())?;
    d.set_item("peak_states", stats.peak_states)?;
    d.set_item("nodes", stats.nodes)?;
    d.set_item("arcs", stats.arcs)?;
    d.set_item("solutions", stats.solutions.clone())?;
    d.set_item("seconds", stats.seconds)?;
    Ok(d)
}

#[pyfunction]
fn tokenize_sentence(text: &str) -> PyResult<Vec<String>> {
    mddgen::tokenize_sentence(text).map_err(to_py)
}

#[pyfunction]
fn render(tokens: Vec<String>) -> String {
    join_tokens(&tokens)
}

/// Extracts n-grams from tokenized sentences, filtered by `lexicon` if given.
#[pyfunction]
#[pyo3(signature = (sentences, n, lexicon=None))]
fn extract_ngrams(sentences: Vec<Vec<String>>, n: usize, lexicon: Option<&PyLexicon>) -> PyResult<Vec<RecordTuple>> {
    let (records, _) = mddgen::extract_ngrams(&sentences, n).map_err(to_py)?;
    let records = match lexicon {
        Some(lex) => mddgen::filter_ngrams(&records, &lex.inner),
        None => records,
    };
    Ok(from_records(records))
}

/// Returns `(mdd, stats)`.
#[pyfunction]
#[pyo3(signature = (model, index, lexicon, max_states=None))]
fn compile<'py>(
    py: Python<'py>,
    model: &PyConstraintModel,
    index: &PyNgramIndex,
    lexicon: &PyLexicon,
    max_states: Option<usize>,
) -> PyResult<(PyMdd, Bound<'py, PyDict>)> {
    let options = CompileOptions {
        max_states,
        ..Default::default()
    };
    let (mdd, stats) = py
        .detach(|| compile_with(&model.inner, &index.inner, &lexicon.inner, &options))
        .map_err(to_py)?;
    Ok((PyMdd { inner: mdd }, stats_dict(py, &stats)?))
}

/// Restricts the first word to a language variant's rule.
#[pyfunction]
fn refine_variant(mdd: &PyMdd, variant: &str, lexicon: &PyLexicon) -> PyResult<PyMdd> {
    let v: RadnerVariant = variant.parse().map_err(to_py)?;
    Ok(PyMdd {
        inner: mddgen::refine(&mdd.inner, &[v.first_word()], &lexicon.inner).map_err(to_py)?,
    })
}

#[pyfunction]
fn ppl(probability: f64, n: usize) -> f64 {
    ppl_from_probability(probability, n)
}

/// Sorts `(text, ppl)` pairs by perplexity, ties by text.
#[pyfunction]
#[pyo3(signature = (scored, top_k=None))]
fn rank(scored: Vec<(String, f64)>, top_k: Option<usize>) -> Vec<(String, f64)> {
    let scored = scored
        .into_iter()
        .map(|(rendered, ppl)| ScoredSentence {
            tokens: Vec::new(),
            rendered,
            ppl,
            scorer_id: "python".into(),
        })
        .collect();
    rank_sentences(scored, top_k)
        .into_iter()
        .map(|s| (s.rendered, s.ppl))
        .collect()
}

/// Runs the whole pipeline from a JSON config file.
#[pyfunction]
fn run_pipeline<'py>(py: Python<'py>, config: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let summary = py
        .detach(|| PipelineConfig::load(&config).and_then(|cfg| pipeline::run(&cfg)))
        .map_err(to_py)?;
    let d = stats_dict(py, &summary.stats)?;
    d.set_item("records", summary.records)?;
    d.set_item("ranked", summary.ranked)?;
    d.set_item("failed", summary.failed)?;
    d.set_item("output", summary.output)?;
    Ok(d)
}

#[pymodule]
fn mddgen_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLexicon>()?;
    m.add_class::<PyNgramIndex>()?;
    m.add_class::<PyConstraintModel>()?;
    m.add_class::<PyMdd>()?;
    m.add_class::<PyLanguageModel>()?;
    m.add_function(wrap_pyfunction!(tokenize_sentence, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(extract_ngrams, m)?)?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(refine_variant, m)?)?;
    m.add_function(wrap_pyfunction!(ppl, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_tuples_round_trip() {
        let tuples: Vec<RecordTuple> = vec![
            (vec!["a".into(), "b".into()], 3, true, false),
            (vec!["b".into(), "c".into()], 1, false, true),
        ];
        assert_eq!(from_records(to_records(tuples.clone())), tuples);
    }
}
