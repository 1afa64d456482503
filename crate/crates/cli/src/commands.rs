use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use raidradar_core::classifiers::{self, ClassifierSpec, TrainedModel};
use raidradar_core::config::PipelineConfig;
use raidradar_core::corpus::{self, VideoRecord};
use raidradar_core::ensemble::{EnsembleModel, ModalityProbs};
use raidradar_core::evaluation::{self, predict_probs, EvalReport, Experiment, ModalityModel};
use raidradar_core::features::{ModalityFeaturizer, VideoDocuments};
use raidradar_core::labeling::{self, RaidLabel};
use raidradar_core::textprep::topic_prevalence;
use raidradar_core::vectorizer::{top_terms_per_class, FeatureMatrix};
use raidradar_core::{Error, Modality};

use crate::{Command, Common, Mode, ReportArgs};

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_data_error() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type Outcome = std::result::Result<(), Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Ingest { input, report } => ingest(&input, &report),
        Command::Label {
            corpus,
            lexicon,
            common,
            out,
        } => label(&corpus, lexicon, &common, &out),
        Command::Featurize {
            corpus,
            common,
            experiment,
            out,
        } => featurize(&corpus, &common, experiment, &out),
        Command::Train {
            modality,
            features,
            labels,
            spec,
            seed,
            out,
        } => train(modality, &features, &labels, spec.as_deref(), seed, &out),
        Command::FitEnsemble {
            models,
            corpus,
            mode,
            experiment,
            common,
            out,
        } => fit_ensemble(&models, &corpus, mode, experiment, &common, &out),
        Command::Score {
            models,
            ensemble,
            corpus,
            common,
            out,
        } => score(&models, &ensemble, &corpus, &common, &out),
        Command::Evaluate {
            corpus,
            experiment,
            common,
            out,
        } => evaluate(&corpus, experiment, &common, &out),
        Command::Report(args) => report(&args),
    }
}

fn resolve_config(common: &Common) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.apply_seed_env()?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    eprintln!("raidradar: seed {}", cfg.seed);
    Ok(cfg)
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Outcome {
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

/// Records the resolved settings of a run next to its outputs.
fn log_run(path: &Path, command: &str, seed: u64, settings: impl Serialize) -> Outcome {
    let doc = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": settings,
    });
    write(path, serde_json::to_string_pretty(&doc).expect("run log serializes") + "\n")
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".run.json");
    out.with_file_name(name)
}

fn ingest(input: &Path, report_path: &Path) -> Outcome {
    let report = corpus::validation_report(input)?;
    write(report_path, serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    log_run(&sidecar(report_path), "ingest", 0, json!({ "input": input }))?;
    eprintln!(
        "raidradar: {} records, {} valid, {} invalid",
        report.lines,
        report.valid,
        report.invalid.len()
    );
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            message: format!(
                "{} invalid records in {} (see {})",
                report.invalid.len(),
                input.display(),
                report_path.display()
            ),
        })
    }
}

fn label(corpus_path: &Path, lexicon: Option<PathBuf>, common: &Common, out: &Path) -> Outcome {
    let mut cfg = resolve_config(common)?;
    if lexicon.is_some() {
        cfg.lexicon = lexicon;
    }
    cfg.check()?;
    let lexicon = cfg
        .hate_lexicon()?
        .ok_or_else(|| usage("a lexicon is required (--lexicon or `lexicon` in the config)"))?;
    let mut records = corpus::ingest(corpus_path)?;
    let labels: Vec<RaidLabel> = records
        .par_iter()
        .map(|r| labeling::label(r, &cfg.label, &lexicon))
        .collect();
    let mut tally: BTreeMap<RaidLabel, usize> = BTreeMap::new();
    for (r, l) in records.iter_mut().zip(labels) {
        r.label = Some(l);
        *tally.entry(l).or_default() += 1;
    }
    corpus::write_records(out, &records)?;
    log_run(&sidecar(out), "label", cfg.seed, &cfg)?;
    eprintln!("raidradar: labels {tally:?}");
    Ok(())
}

fn extract_all(records: &[VideoRecord], cfg: &PipelineConfig) -> Result<Vec<VideoDocuments>, Failure> {
    let res = cfg.resources()?;
    Ok(records.par_iter().map(|r| VideoDocuments::extract(r, &res)).collect())
}

fn featurizer_path(dir: &Path, m: Modality) -> PathBuf {
    dir.join(format!("{m}.featurizer.json"))
}

fn model_path(dir: &Path, m: Modality) -> PathBuf {
    dir.join(format!("{m}.model.json"))
}

fn featurize(corpus_path: &Path, common: &Common, experiment: Option<Experiment>, out: &Path) -> Outcome {
    let cfg = resolve_config(common)?;
    let records = corpus::ingest(corpus_path)?;
    let docs = extract_all(&records, &cfg)?;
    create_dir(out)?;
    let doc_refs: Vec<&VideoDocuments> = docs.iter().collect();
    for m in Modality::ALL {
        let Some(featurizer) = ModalityFeaturizer::fit(m, &doc_refs, &cfg.vectorizer)? else {
            eprintln!("raidradar: no {m} input in corpus; skipped");
            continue;
        };
        let matrix = featurizer.matrix(records.iter().map(|r| r.video_id.as_str()).zip(&docs));
        featurizer.save(featurizer_path(out, m))?;
        matrix.save(out.join(format!("{m}.matrix")))?;
        eprintln!("raidradar: {m}: {} rows x {} columns", matrix.n_rows(), matrix.dims());
    }
    let mut w = csv::Writer::from_path(out.join("labels.csv"))?;
    w.write_record(["video_id", "label"])?;
    for r in &records {
        let value = match experiment {
            Some(exp) => match exp.class_of(r) {
                Some(true) => "1",
                Some(false) => "0",
                None => continue,
            },
            None => match r.label.unwrap_or(RaidLabel::Unlabeled) {
                RaidLabel::Raided => "raided",
                RaidLabel::NonRaided => "non_raided",
                RaidLabel::Unlabeled => "unlabeled",
            },
        };
        w.write_record([r.video_id.as_str(), value])?;
    }
    w.flush().map_err(|e| Error::io(out.join("labels.csv"), e))?;
    log_run(&out.join("run_config.json"), "featurize", cfg.seed, &cfg)
}

fn read_labels(path: &Path) -> Result<HashMap<String, bool>, Failure> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut labels = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let (Some(id), Some(value)) = (row.get(0), row.get(1)) else {
            return Err(Error::Parse {
                line: i + 2,
                message: format!("{}: expected video_id,label", path.display()),
            }
            .into());
        };
        let class = match value.trim() {
            "1" | "true" | "raided" => true,
            "0" | "false" | "non_raided" => false,
            "" | "unlabeled" => continue,
            other => {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("{}: unknown label `{other}`", path.display()),
                }
                .into())
            }
        };
        labels.insert(id.to_string(), class);
    }
    Ok(labels)
}

fn train(
    modality: Modality,
    features: &Path,
    labels_path: &Path,
    spec_path: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Outcome {
    let mut spec = match spec_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<ClassifierSpec>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => ClassifierSpec::default_for(modality),
    };
    let mut env_cfg = PipelineConfig {
        seed: spec.seed,
        ..PipelineConfig::default()
    };
    env_cfg.apply_seed_env()?;
    spec.seed = seed.unwrap_or(env_cfg.seed);
    spec.check()?;
    eprintln!("raidradar: seed {}", spec.seed);

    let matrix = FeatureMatrix::load(features)?;
    let labels = read_labels(labels_path)?;
    let (positions, y): (Vec<usize>, Vec<bool>) = matrix
        .row_ids()
        .iter()
        .enumerate()
        .filter_map(|(i, id)| labels.get(id).map(|&l| (i, l)))
        .unzip();
    if positions.is_empty() {
        return Err(Error::Empty(format!(
            "no row of {} has a binary label in {}",
            features.display(),
            labels_path.display()
        ))
        .into());
    }
    let model = classifiers::train(&spec, &matrix.select(&positions), &y)?;
    model.save(out)?;
    log_run(&sidecar(out), "train", spec.seed, json!({ "modality": modality, "spec": spec }))?;
    eprintln!("raidradar: trained {modality} model on {} rows", y.len());
    Ok(())
}

fn load_models(dir: &Path) -> Result<BTreeMap<Modality, ModalityModel>, Failure> {
    let mut models = BTreeMap::new();
    for m in Modality::ALL {
        let (fp, mp) = (featurizer_path(dir, m), model_path(dir, m));
        if !mp.is_file() {
            continue;
        }
        let featurizer = ModalityFeaturizer::load(&fp)?;
        let model = TrainedModel::load(&mp)?;
        models.insert(m, ModalityModel::new(featurizer, model)?);
    }
    if models.is_empty() {
        return Err(Error::Config(format!(
            "{}: no <modality>.model.json files found",
            dir.display()
        ))
        .into());
    }
    Ok(models)
}

fn corpus_probs(
    models: &BTreeMap<Modality, ModalityModel>,
    records: &[VideoRecord],
    cfg: &PipelineConfig,
) -> Result<Vec<ModalityProbs>, Failure> {
    let docs = extract_all(records, cfg)?;
    Ok(docs
        .par_iter()
        .map(|d| predict_probs(models, d))
        .collect::<raidradar_core::Result<Vec<_>>>()?)
}

fn fit_ensemble(
    models_dir: &Path,
    corpus_path: &Path,
    mode: Mode,
    experiment: Experiment,
    common: &Common,
    out: &Path,
) -> Outcome {
    let cfg = resolve_config(common)?;
    let models = load_models(models_dir)?;
    let settings = &cfg.ensemble;
    let ensemble = match mode {
        Mode::Weighted => {
            let records: Vec<VideoRecord> = corpus::ingest(corpus_path)?
                .into_iter()
                .filter(|r| experiment.class_of(r).is_some())
                .collect();
            let labels: Vec<bool> = records.iter().filter_map(|r| experiment.class_of(r)).collect();
            let probs = corpus_probs(&models, &records, &cfg)?;
            let stacker = ClassifierSpec {
                seed: cfg.seed,
                ..settings.stacker.clone()
            };
            let mut e = EnsembleModel::fit_weighted(&probs, &labels, &stacker)?;
            e.decision_threshold = settings.decision_threshold;
            e
        }
        Mode::Average => {
            let mut e = EnsembleModel::average(settings.average_weights);
            e.decision_threshold = settings.decision_threshold;
            e
        }
        Mode::Majority => {
            let mut e = EnsembleModel::majority();
            e.vote_threshold = settings.vote_threshold;
            e
        }
    };
    ensemble.save(out)?;
    log_run(&sidecar(out), "fit-ensemble", cfg.seed, &cfg)?;
    let w = ensemble.weights;
    eprintln!(
        "raidradar: weights metadata {:.4} transcript {:.4} thumbnail {:.4}",
        w.metadata, w.transcript, w.thumbnail
    );
    Ok(())
}

fn score(models_dir: &Path, ensemble_path: &Path, corpus_path: &Path, common: &Common, out: &Path) -> Outcome {
    let cfg = resolve_config(common)?;
    let models = load_models(models_dir)?;
    let ensemble = EnsembleModel::load(ensemble_path)?;
    let records = corpus::ingest(corpus_path)?;
    let probs = corpus_probs(&models, &records, &cfg)?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["video_id", "metadata", "transcript", "thumbnail", "score", "decision"])?;
    let mut raids = 0;
    for (r, p) in records.iter().zip(&probs) {
        let d = ensemble.predict(p)?;
        raids += usize::from(d.raid);
        let cell = |m| p.get(m).map(|x| format!("{x:?}")).unwrap_or_default();
        w.write_record([
            r.video_id.clone(),
            cell(Modality::Metadata),
            cell(Modality::Transcript),
            cell(Modality::Thumbnail),
            format!("{:?}", d.score),
            u8::from(d.raid).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    log_run(&sidecar(out), "score", cfg.seed, &cfg)?;
    eprintln!("raidradar: {raids} of {} videos flagged", records.len());
    Ok(())
}

fn evaluate(corpus_path: &Path, experiment: Experiment, common: &Common, out: &Path) -> Outcome {
    let cfg = resolve_config(common)?;
    let records = corpus::ingest(corpus_path)?;
    let resources = cfg.resources()?;
    let exp_cfg = cfg.experiment();
    eprintln!(
        "raidradar: {experiment}, {} rounds over {} records",
        exp_cfg.split.rounds,
        records.len()
    );
    let report = evaluation::run_experiment(&records, experiment, &resources, &exp_cfg)?;
    create_dir(out)?;
    write(&out.join("report.json"), report.to_json() + "\n")?;
    write(&out.join("roc.csv"), report.roc_csv())?;
    log_run(&out.join("run_config.json"), "evaluate", cfg.seed, &cfg)?;
    eprint!("{}", metrics_table(&report));
    Ok(())
}

fn metrics_table(report: &EvalReport) -> String {
    let mut s = format!(
        "{:<20} {:>9} {:>9} {:>9} {:>9} {:>7}\n",
        "classifier", "precision", "recall", "f1", "auc", "rounds"
    );
    for (name, m) in &report.summary {
        let _ = writeln!(
            s,
            "{:<20} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>7}",
            name, m.mean.precision, m.mean.recall, m.mean.f1, m.mean.auc, m.rounds
        );
    }
    let w = report.mean_ensemble_weights;
    let _ = writeln!(
        s,
        "ensemble weights: metadata {:.4}, transcript {:.4}, thumbnail {:.4}",
        w.metadata, w.transcript, w.thumbnail
    );
    s
}

fn report(args: &ReportArgs) -> Outcome {
    if args.evaluation.is_none() && args.corpus.is_none() {
        return Err(usage("report needs --evaluation and/or --corpus"));
    }
    let mut doc = serde_json::Map::new();
    let mut text = String::new();
    if let Some(path) = &args.evaluation {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: EvalReport =
            serde_json::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        text.push_str(&format!("{} (seed {})\n", report.experiment, report.seed));
        text.push_str(&metrics_table(&report));
        doc.insert("summary".into(), json!(report.summary));
        doc.insert("ensemble_weights".into(), json!(report.mean_ensemble_weights));
    }
    if let Some(path) = &args.corpus {
        let cfg = resolve_config(&args.common)?;
        let records: Vec<VideoRecord> = corpus::ingest(path)?
            .into_iter()
            .filter(|r| matches!(r.label, Some(RaidLabel::Raided | RaidLabel::NonRaided)))
            .collect();
        let labels: Vec<RaidLabel> = records.iter().filter_map(|r| r.label).collect();
        let docs = extract_all(&records, &cfg)?;
        let res = cfg.resources()?;

        let captions: Vec<(Vec<String>, RaidLabel)> = docs
            .iter()
            .zip(&labels)
            .map(|(d, &l)| (d.thumbnail.clone().unwrap_or_default(), l))
            .collect();
        let topics = topic_prevalence(&captions, &res.categories)?;
        text.push_str(&format!("\n{:<16} {:>11} {:>8} {:>10}\n", "topic", "non-raided%", "raided%", "difference"));
        for t in &topics {
            let _ = writeln!(
                text,
                "{:<16} {:>11.2} {:>8.2} {:>10.2}",
                t.topic, t.non_raided_pct, t.raided_pct, t.difference
            );
        }

        let refs: Vec<&VideoDocuments> = docs.iter().collect();
        let featurizer = ModalityFeaturizer::fit(Modality::Metadata, &refs, &cfg.vectorizer)?
            .ok_or_else(|| Error::Empty("corpus has no labeled videos".into()))?;
        let matrix = featurizer.matrix(records.iter().map(|r| r.video_id.as_str()).zip(&docs));
        let terms = top_terms_per_class(&matrix, &labels, &featurizer.vocabulary, args.top, &BTreeSet::new())?;
        for (name, list) in [("raided", &terms.raided), ("non-raided", &terms.non_raided)] {
            let _ = writeln!(text, "\ntop metadata terms, {name}:");
            for (term, weight) in list {
                let _ = writeln!(text, "  {term:<24} {weight:.4}");
            }
        }
        doc.insert("topics".into(), json!(topics));
        doc.insert("top_terms".into(), json!(terms));
    }
    print!("{text}");
    if let Some(out) = &args.out {
        write(out, serde_json::to_string_pretty(&doc).expect("report serializes") + "\n")?;
    }
    Ok(())
}
