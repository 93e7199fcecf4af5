//! Python bindings for the tricorpus toolkit.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tricorpus::align::{self, AlignmentPath, PairOptions};
use tricorpus::bpe;
use tricorpus::corpus::{self, Format};
use tricorpus::experiments::{self, ExperimentSpec, LangTriple, RefusalRules};
use tricorpus::metrics;
use tricorpus::textprep::{self, Abbreviations, CleanReport};
use tricorpus::verses::{self, VerseDoc};
use tricorpus::{LangTag, Source};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tag(code: &str) -> PyResult<LangTag> {
    LangTag::new(code).map_err(value_err)
}

fn parse_source(name: &str) -> PyResult<Source> {
    name.parse().map_err(value_err)
}

fn report_dict<'py>(py: Python<'py>, r: &CleanReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("input_chars", r.input_chars)?;
    d.set_item("removed_nonprintable", r.removed_nonprintable)?;
    d.set_item("encoding_fixes", r.encoding_fixes)?;
    d.set_item("palochka_normalizations", r.palochka_normalizations)?;
    Ok(d)
}

/// Repairs cp1252/Latin-1 mojibake line by line. Returns the text and the
/// number of repaired lines.
#[pyfunction]
fn fix_encoding(text: &str) -> (String, usize) {
    textprep::fix_encoding(text)
}

#[pyfunction]
fn normalize<'py>(py: Python<'py>, text: &str) -> PyResult<(String, Bound<'py, PyDict>)> {
    let (out, r) = textprep::normalize(text);
    Ok((out, report_dict(py, &r)?))
}

/// Encoding repair followed by normalization.
#[pyfunction]
fn clean<'py>(py: Python<'py>, text: &str) -> PyResult<(String, Bound<'py, PyDict>)> {
    let (out, r) = textprep::clean(text);
    Ok((out, report_dict(py, &r)?))
}

#[pyfunction]
#[pyo3(signature = (text, lang, abbrev_dir=None))]
fn split_sentences(text: &str, lang: &str, abbrev_dir: Option<PathBuf>) -> PyResult<Vec<String>> {
    let abbrevs = match abbrev_dir {
        Some(dir) => Abbreviations::load_dir(&dir)?,
        None => Abbreviations::defaults(),
    };
    Ok(textprep::split_sentences(text, &tag(lang)?, &abbrevs))
}

/// Clean, split, length-filter and deduplicate raw documents.
#[pyfunction]
#[pyo3(signature = (documents, lang, min_words=textprep::DEFAULT_MIN_WORDS))]
fn monolingual_pipeline<'py>(
    py: Python<'py>,
    documents: Vec<String>,
    lang: &str,
    min_words: usize,
) -> PyResult<(Vec<String>, Bound<'py, PyDict>)> {
    let (out, report, counts) =
        textprep::monolingual_pipeline(&documents, &tag(lang)?, &Abbreviations::defaults(), min_words);
    let d = report_dict(py, &report)?;
    d.set_item("split", counts.split)?;
    d.set_item("after_min_words", counts.after_min_words)?;
    d.set_item("after_dedup", counts.after_dedup)?;
    Ok((out, d))
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    metrics::tokenize(text).into_iter().map(str::to_string).collect()
}

fn zip_pairs<'a>(hyps: &'a [String], refs: &'a [String]) -> PyResult<Vec<(&'a str, &'a str)>> {
    if hyps.len() != refs.len() {
        return Err(PyValueError::new_err(format!(
            "{} hypotheses but {} references",
            hyps.len(),
            refs.len()
        )));
    }
    Ok(hyps.iter().zip(refs).map(|(h, r)| (h.as_str(), r.as_str())).collect())
}

/// Corpus-level BLEU in [0, 100].
#[pyfunction]
fn bleu(hypotheses: Vec<String>, references: Vec<String>) -> PyResult<f64> {
    metrics::bleu(&zip_pairs(&hypotheses, &references)?).map_err(value_err)
}

/// Corpus-level ChrF++ in [0, 100].
#[pyfunction]
fn chrfpp(hypotheses: Vec<String>, references: Vec<String>) -> PyResult<f64> {
    metrics::chrfpp(&zip_pairs(&hypotheses, &references)?).map_err(value_err)
}

#[pyfunction]
fn largest_remainder(weights: Vec<usize>, total: usize) -> Vec<usize> {
    experiments::largest_remainder(&weights, total)
}

#[pyclass(name = "Corpus", module = "tricorpus_py")]
struct PyCorpus {
    inner: tricorpus::Corpus,
}

#[pymethods]
impl PyCorpus {
    #[new]
    #[pyo3(signature = (name=""))]
    fn new(name: &str) -> Self {
        PyCorpus {
            inner: tricorpus::Corpus::new(name),
        }
    }

    /// Loads JSONL or TSV, chosen by extension unless `format` is given.
    #[staticmethod]
    #[pyo3(signature = (path, format=None))]
    fn load(path: PathBuf, format: Option<&str>) -> PyResult<Self> {
        let format = match format {
            Some(f) => f.parse().map_err(value_err)?,
            None => Format::from_path(&path),
        };
        let inner = corpus::load_corpus(&path, format).map_err(value_err)?;
        Ok(PyCorpus { inner })
    }

    #[pyo3(signature = (path, format=None))]
    fn save(&self, path: PathBuf, format: Option<&str>) -> PyResult<()> {
        let format = match format {
            Some(f) => f.parse().map_err(value_err)?,
            None => Format::from_path(&path),
        };
        corpus::save_corpus(&self.inner, &path, format).map_err(value_err)
    }

    /// Adds a unit whose members are all original text.
    fn add_unit(&mut self, id: &str, source: &str, texts: BTreeMap<String, String>) -> PyResult<()> {
        let texts = texts
            .into_iter()
            .map(|(l, t)| Ok((tag(&l)?, t)))
            .collect::<PyResult<Vec<_>>>()?;
        let unit = tricorpus::ParallelUnit::from_texts(id, parse_source(source)?, texts).map_err(value_err)?;
        if self.inner.unit(id).is_some() {
            return Err(PyValueError::new_err(format!("duplicate unit id {id:?}")));
        }
        self.inner.units.push(unit);
        Ok(())
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    fn __len__(&self) -> usize {
        self.inner.units.len()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.units.iter().map(|u| u.id.clone()).collect()
    }

    fn source(&self, id: &str) -> Option<String> {
        self.inner.unit(id).map(|u| u.source.to_string())
    }

    fn text(&self, id: &str, lang: &str) -> PyResult<Option<String>> {
        let lang = tag(lang)?;
        Ok(self.inner.unit(id).and_then(|u| u.text(&lang)).map(str::to_string))
    }

    fn languages(&self) -> Vec<String> {
        self.inner.languages().iter().map(|l| l.to_string()).collect()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(value_err)
    }

    /// Checks the back-translation interface: every unit must carry a
    /// member tagged `back_translated`.
    fn validate_back_translations(&self) -> PyResult<()> {
        experiments::validate_back_translations(&self.inner.units).map_err(value_err)
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = corpus::corpus_stats(&self.inner);
        let d = PyDict::new(py);
        let by_source: BTreeMap<String, usize> = s.by_source.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        d.set_item("by_source", by_source)?;
        d.set_item("total_units", s.total_units)?;
        d.set_item("mono", s.mono)?;
        Ok(d)
    }

    /// Stratified holdout split.
    #[pyo3(signature = (holdout=experiments::DEFAULT_HOLDOUT, seed=experiments::DEFAULT_SEED))]
    fn split(&self, holdout: usize, seed: u64) -> PyResult<PySplit> {
        let inner = experiments::stratified_split(&self.inner, holdout, seed).map_err(value_err)?;
        Ok(PySplit { inner })
    }

    fn __repr__(&self) -> String {
        format!("Corpus(name={:?}, units={})", self.inner.name, self.inner.units.len())
    }
}

#[pyclass(name = "Split", module = "tricorpus_py")]
struct PySplit {
    inner: experiments::SplitAssignment,
}

#[pymethods]
impl PySplit {
    #[staticmethod]
    fn from_tsv(text: &str) -> PyResult<Self> {
        let inner = experiments::SplitAssignment::from_tsv(text).map_err(value_err)?;
        Ok(PySplit { inner })
    }

    fn to_tsv(&self) -> String {
        self.inner.to_tsv()
    }

    fn is_holdout(&self, unit_id: &str) -> bool {
        self.inner.is_holdout(unit_id)
    }

    fn holdout_ids(&self) -> Vec<String> {
        self.inner.holdout_ids().into_iter().map(str::to_string).collect()
    }

    #[getter]
    fn quotas(&self) -> BTreeMap<String, usize> {
        self.inner.quotas.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.assignment.len()
    }
}

/// Training records of one experiment preset (1-4) as
/// `(unit_id, source, direction, src_text, tgt_text)` tuples.
#[pyfunction]
#[pyo3(signature = (corpus, split, experiment, back_translated=None))]
fn assemble(
    corpus: PyRef<'_, PyCorpus>,
    split: PyRef<'_, PySplit>,
    experiment: u8,
    back_translated: Option<PyRef<'_, PyCorpus>>,
) -> PyResult<Vec<(String, String, String, String, String)>> {
    let spec = ExperimentSpec::preset(experiment, &LangTriple::default()).map_err(value_err)?;
    let bt = back_translated.as_ref().map(|c| c.inner.units.as_slice());
    let records = experiments::assemble_experiment(&corpus.inner, &split.inner, &spec, bt).map_err(value_err)?;
    Ok(records
        .into_iter()
        .map(|r| (r.unit_id, r.source.to_string(), r.direction.label(), r.src_text, r.tgt_text))
        .collect())
}

/// Writes an `id,text` batch of holdout sentences and returns the prompt.
#[pyfunction]
fn export_llm_batch(
    corpus: PyRef<'_, PyCorpus>,
    split: PyRef<'_, PySplit>,
    source: &str,
    n: usize,
    src_lang: &str,
    tgt_lang: &str,
    out: PathBuf,
) -> PyResult<String> {
    let mut buf = Vec::new();
    let prompt = experiments::export_llm_batch(
        &corpus.inner,
        &split.inner,
        &parse_source(source)?,
        n,
        &tag(src_lang)?,
        &tag(tgt_lang)?,
        &mut buf,
    )
    .map_err(value_err)?;
    std::fs::write(out, buf)?;
    Ok(prompt)
}

/// Reads an `id,text` response CSV against the ids of an exported batch.
/// Returns `(translations, refusals)`.
#[pyfunction]
fn ingest_llm_responses(
    responses: PathBuf,
    batch: PathBuf,
    tgt_lang: &str,
) -> PyResult<(BTreeMap<String, String>, Vec<String>)> {
    let ids = experiments::batch_ids(&batch).map_err(value_err)?;
    let file = std::fs::File::open(responses)?;
    let out = experiments::ingest_llm_responses(file, &ids, &RefusalRules::for_lang(&tag(tgt_lang)?))
        .map_err(value_err)?;
    Ok((out.translations, out.refusals))
}

/// Aligns verse-numbered documents (`lang -> "chapter:verse<TAB>text" lines`)
/// into a corpus. Returns the corpus and the unmatched and conflict counts.
#[pyfunction]
#[pyo3(signature = (docs, source="bible", id_prefix=""))]
fn align_verses(docs: BTreeMap<String, String>, source: &str, id_prefix: &str) -> PyResult<(PyCorpus, usize, usize)> {
    let parsed = docs
        .iter()
        .map(|(l, text)| VerseDoc::parse(tag(l)?, text).map_err(value_err))
        .collect::<PyResult<Vec<_>>>()?;
    let refs: Vec<&VerseDoc> = parsed.iter().collect();
    let out = verses::align_verse_docs(&refs, parse_source(source)?, id_prefix).map_err(value_err)?;
    let mut inner = tricorpus::Corpus::new(source);
    inner.units = out.units;
    Ok((PyCorpus { inner }, out.unmatched.len(), out.conflicts.len()))
}

#[pyclass(name = "BpeModel", module = "tricorpus_py")]
struct PyBpeModel {
    inner: bpe::BpeModel,
}

#[pymethods]
impl PyBpeModel {
    #[staticmethod]
    #[pyo3(signature = (lines, merges, end_of_word=bpe::DEFAULT_END_OF_WORD))]
    fn learn(lines: Vec<String>, merges: usize, end_of_word: &str) -> PyResult<Self> {
        let inner = bpe::learn_bpe(&lines, merges, end_of_word).map_err(value_err)?;
        Ok(PyBpeModel { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = bpe::BpeModel::load(path).map_err(value_err)?;
        Ok(PyBpeModel { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(value_err)
    }

    fn tokenize(&self, text: &str) -> Vec<String> {
        self.inner.tokenize(text)
    }

    /// Token ids; `None` for symbols outside the vocabulary.
    fn encode(&self, text: &str) -> Vec<Option<u32>> {
        self.inner.tokenize_with_ids(text).into_iter().map(|t| t.id).collect()
    }

    fn detokenize(&self, tokens: Vec<String>) -> String {
        self.inner.detokenize(&tokens)
    }

    /// Appends the tokens of `new` missing here, then `lang_code` as a special token.
    fn extend(&self, new: PyRef<'_, PyBpeModel>, lang_code: &str) -> PyResult<PyBpeModel> {
        let inner = bpe::extend_vocab(&self.inner, &new.inner, lang_code).map_err(value_err)?;
        Ok(PyBpeModel { inner })
    }

    fn id(&self, token: &str) -> Option<u32> {
        self.inner.id(token)
    }

    #[getter]
    fn merges(&self) -> Vec<(String, String)> {
        self.inner.merges().to_vec()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    #[getter]
    fn base_vocab_size(&self) -> usize {
        self.inner.base_vocab_size()
    }
}

/// Sentence embeddings in the EMB1 layout, one id per row.
#[pyclass(name = "Embeddings", module = "tricorpus_py")]
struct PyEmbeddings {
    inner: align::EmbeddingMatrix,
}

#[pymethods]
impl PyEmbeddings {
    #[new]
    fn new(ids: Vec<String>, rows: Vec<Vec<f32>>) -> PyResult<Self> {
        let inner = align::EmbeddingMatrix::from_rows(ids, &rows).map_err(value_err)?;
        Ok(PyEmbeddings { inner })
    }

    /// Loads an EMB1 file and its `.ids` sidecar.
    #[staticmethod]
    #[pyo3(signature = (path, renormalize=true))]
    fn load(path: PathBuf, renormalize: bool) -> PyResult<Self> {
        let inner = align::load_embeddings(path, renormalize).map_err(value_err)?;
        Ok(PyEmbeddings { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        align::save_embeddings(&self.inner, path).map_err(value_err)
    }

    /// Non-fatal problems such as rows that are not unit length.
    fn warnings(&self) -> Vec<String> {
        align::embedding_warnings(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    fn row(&self, i: usize) -> PyResult<Vec<f32>> {
        if i >= self.inner.len() {
            return Err(PyValueError::new_err(format!("row {i} out of range")));
        }
        Ok(self.inner.row(i).to_vec())
    }
}

fn run_align(src: &PyEmbeddings, tgt: &PyEmbeddings, skip_penalty: f64) -> PyResult<AlignmentPath> {
    align::align_documents(&src.inner, &tgt.inner, skip_penalty).map_err(value_err)
}

/// Minimum-cost monotonic alignment. Returns beads as
/// `((src_start, src_end), (tgt_start, tgt_end), cost)`.
#[pyfunction]
#[pyo3(signature = (src, tgt, skip_penalty=align::DEFAULT_SKIP_PENALTY))]
fn align_documents(
    src: PyRef<'_, PyEmbeddings>,
    tgt: PyRef<'_, PyEmbeddings>,
    skip_penalty: f64,
) -> PyResult<Vec<((usize, usize), (usize, usize), f64)>> {
    let path = run_align(&src, &tgt, skip_penalty)?;
    Ok(path.beads.iter().map(|b| (b.src, b.tgt, b.cost)).collect())
}

/// Aligns and renders matched beads as dicts with texts, similarity and margin.
#[pyfunction]
#[pyo3(signature = (
    src, tgt, src_texts, tgt_texts,
    skip_penalty=align::DEFAULT_SKIP_PENALTY,
    margin_k=align::DEFAULT_MARGIN_K,
    low_confidence=align::DEFAULT_LOW_CONFIDENCE,
))]
#[allow(clippy::too_many_arguments)]
fn align_pairs<'py>(
    py: Python<'py>,
    src: PyRef<'_, PyEmbeddings>,
    tgt: PyRef<'_, PyEmbeddings>,
    src_texts: Vec<String>,
    tgt_texts: Vec<String>,
    skip_penalty: f64,
    margin_k: usize,
    low_confidence: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let path = run_align(&src, &tgt, skip_penalty)?;
    let opts = PairOptions {
        margin_k,
        low_confidence,
    };
    let pairs =
        align::aligned_pairs(&path, &src.inner, &tgt.inner, &src_texts, &tgt_texts, opts).map_err(value_err)?;
    pairs
        .into_iter()
        .map(|p| {
            let d = PyDict::new(py);
            let (s, t) = p.bead.shape();
            d.set_item("src_ids", p.src_ids)?;
            d.set_item("tgt_ids", p.tgt_ids)?;
            d.set_item("src_text", p.src_text)?;
            d.set_item("tgt_text", p.tgt_text)?;
            d.set_item("bead", format!("{s}-{t}"))?;
            d.set_item("similarity", p.similarity)?;
            d.set_item("margin", p.margin)?;
            d.set_item("low_confidence", p.low_confidence)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn tricorpus_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PySplit>()?;
    m.add_class::<PyBpeModel>()?;
    m.add_class::<PyEmbeddings>()?;
    m.add_function(wrap_pyfunction!(fix_encoding, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(clean, m)?)?;
    m.add_function(wrap_pyfunction!(split_sentences, m)?)?;
    m.add_function(wrap_pyfunction!(monolingual_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(bleu, m)?)?;
    m.add_function(wrap_pyfunction!(chrfpp, m)?)?;
    m.add_function(wrap_pyfunction!(largest_remainder, m)?)?;
    m.add_function(wrap_pyfunction!(assemble, m)?)?;
    m.add_function(wrap_pyfunction!(export_llm_batch, m)?)?;
    m.add_function(wrap_pyfunction!(ingest_llm_responses, m)?)?;
    m.add_function(wrap_pyfunction!(align_verses, m)?)?;
    m.add_function(wrap_pyfunction!(align_documents, m)?)?;
    m.add_function(wrap_pyfunction!(align_pairs, m)?)?;
    Ok(())
}
