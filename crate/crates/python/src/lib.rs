//! Python bindings. Records, configs and reports cross the boundary as JSON
//! strings; vectors as plain lists.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use raidradar_core::classifiers::{self, ClassifierKind, ClassifierSpec, TrainedModel};
use raidradar_core::config::PipelineConfig;
use raidradar_core::corpus::{self, VideoRecord};
use raidradar_core::ensemble::{default_stacker_spec, EnsembleModel, ModalityProbs, ModalityWeights};
use raidradar_core::evaluation::{self, Experiment, SplitSpec};
use raidradar_core::labeling::{self, HateLexicon, LabelConfig};
use raidradar_core::synthetic::{self, PlantedCorpusConfig};
use raidradar_core::textprep;
use raidradar_core::vectorizer::{self, FeatureMatrix, SparseVector};
use raidradar_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("invalid {what}: {e}")))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("value serializes")
}

fn records(lines: Vec<String>) -> PyResult<Vec<VideoRecord>> {
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| corpus::parse_line(l, i + 1).map_err(py_err))
        .collect()
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    textprep::tokenize(text)
}

#[pyfunction]
fn stem(token: &str) -> String {
    textprep::stem(token)
}

#[pyfunction]
fn idf(df: usize, n_docs: usize) -> PyResult<f64> {
    vectorizer::idf(df, n_docs).map_err(py_err)
}

/// Reads and validates a JSONL corpus; returns one JSON string per record.
#[pyfunction]
fn read_corpus(path: &str) -> PyResult<Vec<String>> {
    Ok(corpus::ingest(path).map_err(py_err)?.iter().map(to_json).collect())
}

#[pyfunction]
fn write_corpus(path: &str, lines: Vec<String>) -> PyResult<()> {
    corpus::write_records(path, &records(lines)?).map_err(py_err)
}

/// Violations of one record as `field: message` strings.
#[pyfunction]
fn validate_record(record_json: &str) -> PyResult<Vec<String>> {
    let record = corpus::parse_line(record_json, 1).map_err(py_err)?;
    Ok(corpus::validate(&record).iter().map(ToString::to_string).collect())
}

#[pyfunction]
fn hcps(record_json: &str, lexicon: Vec<String>) -> PyResult<f64> {
    let record = corpus::parse_line(record_json, 1).map_err(py_err)?;
    Ok(labeling::hcps(&record, &HateLexicon::new(lexicon).map_err(py_err)?))
}

#[pyfunction]
#[pyo3(signature = (record_json, config_json=None))]
fn sync_lag(record_json: &str, config_json: Option<&str>) -> PyResult<Option<i64>> {
    let record = corpus::parse_line(record_json, 1).map_err(py_err)?;
    let cfg: LabelConfig = config_json.map_or(Ok(LabelConfig::default()), |c| from_json(c, "label config"))?;
    Ok(labeling::sync_lag(&record, &cfg))
}

/// Label name (`raided`, `non_raided` or `unlabeled`) of one record.
#[pyfunction]
#[pyo3(signature = (record_json, lexicon, config_json=None))]
fn label(record_json: &str, lexicon: Vec<String>, config_json: Option<&str>) -> PyResult<String> {
    let record = corpus::parse_line(record_json, 1).map_err(py_err)?;
    let cfg: LabelConfig = config_json.map_or(Ok(LabelConfig::default()), |c| from_json(c, "label config"))?;
    cfg.check().map_err(py_err)?;
    let lexicon = HateLexicon::new(lexicon).map_err(py_err)?;
    Ok(to_json(&labeling::label(&record, &cfg, &lexicon)).trim_matches('"').to_string())
}

#[pyclass(module = "raidradar")]
struct Vocabulary {
    inner: vectorizer::Vocabulary,
}

#[pymethods]
impl Vocabulary {
    #[new]
    #[pyo3(signature = (docs, min_df=1))]
    fn new(docs: Vec<Vec<String>>, min_df: usize) -> PyResult<Self> {
        Ok(Vocabulary {
            inner: vectorizer::Vocabulary::fit(&docs, min_df).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn terms(&self) -> Vec<String> {
        self.inner.terms().to_vec()
    }

    fn index_of(&self, term: &str) -> Option<usize> {
        self.inner.index_of(term)
    }

    /// Dense TF-IDF vector of one document.
    #[pyo3(signature = (doc, l2_normalize=true))]
    fn transform(&self, doc: Vec<String>, l2_normalize: bool) -> Vec<f64> {
        self.inner.transform(&doc, l2_normalize).to_dense()
    }
}

fn kind_from(name: &str) -> PyResult<ClassifierKind> {
    from_json(&format!("\"{name}\""), "classifier kind")
}

fn dense_matrix(rows: &[Vec<f64>]) -> PyResult<FeatureMatrix> {
    let dims = rows.first().map_or(0, Vec::len);
    let sparse = rows.iter().map(|r| SparseVector::from_dense(r)).collect();
    let ids = (0..rows.len()).map(|i| i.to_string()).collect();
    FeatureMatrix::new(dims, sparse, ids).map_err(py_err)
}

#[pyclass(module = "raidradar")]
struct Model {
    inner: TrainedModel,
}

#[pymethods]
impl Model {
    /// Trains on dense rows. `kind` is one of linear, decision_tree,
    /// random_forest, extra_trees; `hyperparams_json` overrides defaults.
    #[staticmethod]
    #[pyo3(signature = (kind, rows, labels, seed=0, hyperparams_json=None))]
    fn train(
        kind: &str,
        rows: Vec<Vec<f64>>,
        labels: Vec<bool>,
        seed: u64,
        hyperparams_json: Option<&str>,
    ) -> PyResult<Self> {
        let mut spec = ClassifierSpec::new(kind_from(kind)?).with_seed(seed);
        if let Some(h) = hyperparams_json {
            spec.hyperparams = from_json(h, "hyperparameters")?;
        }
        let x = dense_matrix(&rows)?;
        Ok(Model {
            inner: classifiers::train(&spec, &x, &labels).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Model {
            inner: TrainedModel::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn predict_proba(&self, row: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_proba(&SparseVector::from_dense(&row)).map_err(py_err)
    }

    fn feature_importances(&self) -> Vec<f64> {
        self.inner.feature_importances()
    }

    #[getter]
    fn dims(&self) -> usize {
        self.inner.dims
    }
}

fn probs_from(p: [Option<f64>; 3]) -> ModalityProbs {
    ModalityProbs::new(p[0], p[1], p[2])
}

#[pyclass(module = "raidradar")]
struct Ensemble {
    inner: EnsembleModel,
}

#[pymethods]
impl Ensemble {
    #[staticmethod]
    #[pyo3(signature = (metadata=1.0, transcript=1.0, thumbnail=1.0))]
    fn average(metadata: f64, transcript: f64, thumbnail: f64) -> Self {
        Ensemble {
            inner: EnsembleModel::average(ModalityWeights {
                metadata,
                transcript,
                thumbnail,
            }),
        }
    }

    #[staticmethod]
    fn majority() -> Self {
        Ensemble {
            inner: EnsembleModel::majority(),
        }
    }

    /// Fits the weighted-vote stacker. Each probability triple is ordered
    /// metadata, transcript, thumbnail; `None` marks a missing modality.
    #[staticmethod]
    #[pyo3(signature = (probs, labels, seed=0))]
    fn fit_weighted(probs: Vec<[Option<f64>; 3]>, labels: Vec<bool>, seed: u64) -> PyResult<Self> {
        let validation: Vec<ModalityProbs> = probs.into_iter().map(probs_from).collect();
        Ok(Ensemble {
            inner: EnsembleModel::fit_weighted(&validation, &labels, &default_stacker_spec(seed)).map_err(py_err)?,
        })
    }

    /// Returns `(raid, score)`.
    #[pyo3(signature = (metadata=None, transcript=None, thumbnail=None))]
    fn predict(&self, metadata: Option<f64>, transcript: Option<f64>, thumbnail: Option<f64>) -> PyResult<(bool, f64)> {
        let d = self
            .inner
            .predict(&probs_from([metadata, transcript, thumbnail]))
            .map_err(py_err)?;
        Ok((d.raid, d.score))
    }

    fn weights(&self) -> BTreeMap<&'static str, f64> {
        let w = self.inner.weights;
        BTreeMap::from([
            ("metadata", w.metadata),
            ("transcript", w.transcript),
            ("thumbnail", w.thumbnail),
        ])
    }

    fn to_json(&self) -> String {
        to_json(&self.inner)
    }
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let c = evaluation::roc_auc(&scores, &labels).map_err(py_err)?;
    Ok((c.auc, c.points))
}

#[pyfunction]
fn precision_recall_f1(decisions: Vec<bool>, labels: Vec<bool>) -> PyResult<(f64, f64, f64)> {
    let m = evaluation::precision_recall_f1(&decisions, &labels).map_err(py_err)?;
    Ok((m.precision, m.recall, m.f1))
}

/// Train/val/test index lists for the minority and majority classes, as JSON.
#[pyfunction]
#[pyo3(signature = (n_minority, n_majority, seed=0, round=0))]
fn make_splits(n_minority: usize, n_majority: usize, seed: u64, round: usize) -> PyResult<String> {
    let spec = SplitSpec {
        seed,
        ..SplitSpec::default()
    };
    Ok(to_json(&evaluation::make_splits(n_minority, n_majority, &spec, round).map_err(py_err)?))
}

/// Generated corpus with planted class signal, one JSON record per entry.
#[pyfunction]
#[pyo3(signature = (config_json=None))]
fn planted_corpus(config_json: Option<&str>) -> PyResult<Vec<String>> {
    let cfg: PlantedCorpusConfig =
        config_json.map_or(Ok(PlantedCorpusConfig::default()), |c| from_json(c, "corpus config"))?;
    Ok(synthetic::planted_corpus(&cfg).iter().map(to_json).collect())
}

/// Runs the repeated split protocol and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (records_json, experiment, config_json=None))]
fn run_experiment(py: Python<'_>, records_json: Vec<String>, experiment: &str, config_json: Option<&str>) -> PyResult<String> {
    let records = records(records_json)?;
    let exp: Experiment = experiment.parse().map_err(py_err)?;
    let cfg: PipelineConfig = config_json.map_or(Ok(PipelineConfig::default()), |c| from_json(c, "pipeline config"))?;
    cfg.check().map_err(py_err)?;
    let resources = cfg.resources().map_err(py_err)?;
    let exp_cfg = cfg.experiment();
    let report = py
        .detach(|| evaluation::run_experiment(&records, exp, &resources, &exp_cfg))
        .map_err(py_err)?;
    Ok(report.to_json())
}

#[pymodule]
fn raidradar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(stem, m)?)?;
    m.add_function(wrap_pyfunction!(idf, m)?)?;
    m.add_function(wrap_pyfunction!(read_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(write_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(validate_record, m)?)?;
    m.add_function(wrap_pyfunction!(hcps, m)?)?;
    m.add_function(wrap_pyfunction!(sync_lag, m)?)?;
    m.add_function(wrap_pyfunction!(label, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(precision_recall_f1, m)?)?;
    m.add_function(wrap_pyfunction!(make_splits, m)?)?;
    m.add_function(wrap_pyfunction!(planted_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<Vocabulary>()?;
    m.add_class::<Model>()?;
    m.add_class::<Ensemble>()?;
    Ok(())
}
