use raidradar_core::corpus::{self, VideoRecord};
use raidradar_core::evaluation::{
    run_experiment, run_round, EvalReport, Experiment, ExperimentConfig, SplitSpec, WEIGHTED_VOTE,
};
use raidradar_core::features::{TextResources, VideoDocuments};
use raidradar_core::labeling::{self, HateLexicon, LabelConfig};
use raidradar_core::synthetic::{planted_corpus, PlantedCorpusConfig};

fn small_corpus() -> Vec<VideoRecord> {
    planted_corpus(&PlantedCorpusConfig {
        n_raided: 60,
        n_non_raided: 300,
        seed: 7,
        ..PlantedCorpusConfig::default()
    })
}

fn config(rounds: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        split: SplitSpec {
            rounds,
            seed,
            ..SplitSpec::default()
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn single_round_matches_manual_round() {
    let corpus = small_corpus();
    let res = TextResources::builtin();
    let cfg = config(1, 3);
    let report = run_experiment(&corpus, Experiment::Exp3, &res, &cfg).unwrap();
    let docs: Vec<_> = corpus.iter().map(|r| VideoDocuments::extract(r, &res)).collect();
    let manual = run_round(&corpus, &docs, Experiment::Exp3, &cfg, 0).unwrap();
    assert_eq!(report.rounds, vec![manual]);
}

#[test]
fn every_experiment_produces_well_formed_reports() {
    let corpus = small_corpus();
    let res = TextResources::builtin();
    for exp in [Experiment::Exp1, Experiment::Exp2, Experiment::Exp3] {
        let report = run_experiment(&corpus, exp, &res, &config(3, 1)).unwrap();
        assert_eq!(report.rounds.len(), 3);
        for round in &report.rounds {
            assert_eq!(round.train.positive, round.train.negative, "{exp}: train is balanced");
            assert_eq!(round.val.positive, round.val.negative, "{exp}: val is balanced");
            for m in round.metrics.values() {
                for v in [m.precision, m.recall, m.f1, m.auc] {
                    assert!((0.0..=1.0).contains(&v));
                }
            }
        }
        for curve in report.roc.values() {
            assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
            assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
            for w in curve.points.windows(2) {
                assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
            }
        }
        let w = report.mean_ensemble_weights;
        assert!((w.metadata + w.transcript + w.thumbnail - 1.0).abs() < 1e-9);
        let csv = report.roc_csv();
        assert!(csv.starts_with("classifier,fpr,tpr\n"));
        assert!(csv.contains(&format!("{WEIGHTED_VOTE},0.0,0.0")));
    }
}

#[test]
fn signal_free_corpus_scores_near_chance() {
    let corpus = planted_corpus(&PlantedCorpusConfig {
        n_raided: 100,
        n_non_raided: 400,
        p_signal_raided: 0.05,
        p_signal_non_raided: 0.05,
        seed: 11,
        ..PlantedCorpusConfig::default()
    });
    let report = run_experiment(&corpus, Experiment::Exp2, &TextResources::builtin(), &config(4, 2)).unwrap();
    for (name, s) in &report.summary {
        assert!(
            (0.3..=0.7).contains(&s.mean.auc),
            "{name} auc {} on a corpus without signal",
            s.mean.auc
        );
    }
}

#[test]
fn corpus_survives_a_file_round_trip() {
    let corpus = small_corpus();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    corpus::write_records(&path, &corpus).unwrap();
    assert_eq!(corpus::ingest(&path).unwrap(), corpus);
    assert!(corpus::validation_report(&path).unwrap().is_clean());
}

#[test]
fn generated_labels_follow_the_labeling_rule() {
    let lexicon = HateLexicon::new(["slur1"]).unwrap();
    let cfg = LabelConfig::default();
    for r in small_corpus() {
        assert_eq!(r.label, Some(labeling::label(&r, &cfg, &lexicon)), "{}", r.video_id);
    }
}

#[test]
fn report_json_round_trips() {
    let report = run_experiment(&small_corpus(), Experiment::Exp1, &TextResources::builtin(), &config(2, 5)).unwrap();
    let text = report.to_json();
    let back: EvalReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_json(), text);
    assert_eq!(back.summary, report.summary);
}
