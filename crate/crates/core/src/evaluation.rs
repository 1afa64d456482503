//! Split protocol, metrics and repeated experiment rounds.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{self, ClassifierSpec, TrainedModel};
use crate::corpus::{Source, VideoRecord};
use crate::ensemble::{default_stacker_spec, EnsembleModel, ModalityProbs, ModalityWeights};
use crate::error::{Error, Result};
use crate::features::{ModalityFeaturizer, TextResources, VectorizerConfig, VideoDocuments};
use crate::labeling::RaidLabel;
use crate::modality::Modality;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            rounds: 10,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn check(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split fractions must be in [0, 1] and sum to 1".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Positions into one class's sample list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl ClassSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub minority: ClassSplit,
    pub majority: ClassSplit,
}

fn floor_frac(n: usize, frac: f64) -> usize {
    (n as f64 * frac + 1e-9).floor() as usize
}

/// Random generator for one round: the round number selects the ChaCha
/// stream, so rounds never share randomness.
pub fn round_rng(seed: u64, round: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round as u64);
    rng
}

/// Per-round seed for model training, independent of the split stream.
pub fn derive_seed(seed: u64, round: usize, slot: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(seed ^ mix((round as u64) << 8 | slot))
}

/// Balanced train/validation, unbalanced test. The minority class is cut
/// into floor(train) / floor(val) / remainder; the majority class gives the
/// same train and validation counts and puts everything else in test.
pub fn make_splits(n_minority: usize, n_majority: usize, spec: &SplitSpec, round: usize) -> Result<SplitAssignment> {
    spec.check()?;
    if n_minority < 5 {
        return Err(Error::InfeasibleSplit(format!(
            "minority class has {n_minority} samples, need at least 5"
        )));
    }
    if n_majority < n_minority {
        return Err(Error::InfeasibleSplit(format!(
            "majority class ({n_majority}) smaller than minority ({n_minority})"
        )));
    }
    let n_train = floor_frac(n_minority, spec.train_frac);
    let n_val = floor_frac(n_minority, spec.val_frac);
    if n_train == 0 || n_val == 0 || n_train + n_val >= n_minority {
        return Err(Error::InfeasibleSplit(format!(
            "fractions leave an empty set for {n_minority} minority samples"
        )));
    }
    let mut rng = round_rng(spec.seed, round);
    let mut cut = |n: usize| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let test = idx.split_off(n_train + n_val);
        let val = idx.split_off(n_train);
        ClassSplit { train: idx, val, test }
    };
    let minority = cut(n_minority);
    let majority = cut(n_majority);
    Ok(SplitAssignment { minority, majority })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecallF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Zero denominators give 0.
pub fn precision_recall_f1(decisions: &[bool], labels: &[bool]) -> Result<PrecisionRecallF1> {
    if decisions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: decisions.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&d, &l) in decisions.iter().zip(labels) {
        match (d, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(PrecisionRecallF1 { precision, recall, f1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub auc: f64,
    /// (false positive rate, true positive rate) from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
}

/// ROC curve over every distinct score (tied scores form one step) and its
/// trapezoidal area.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Domain(format!("score {s} is not a number")));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    // twice the area, in units of one positive times one negative
    let mut area2: u64 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (prev_tp, prev_fp) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - prev_fp) * (tp + prev_tp);
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Ok(RocCurve {
        auc: area2 as f64 / (2 * n_pos * n_neg) as f64,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Random platform videos against every fringe-linked video.
    Exp1,
    /// Every non-raided video against raided ones.
    Exp2,
    /// Fringe-linked non-raided videos against raided ones.
    Exp3,
}

impl Experiment {
    /// Class of a record in this experiment: `Some(true)` positive,
    /// `Some(false)` negative, `None` excluded.
    pub fn class_of(self, record: &VideoRecord) -> Option<bool> {
        match self {
            Experiment::Exp1 => Some(record.source == Source::FringeLinked),
            Experiment::Exp2 => record.label.and_then(RaidLabel::as_binary),
            Experiment::Exp3 => match record.source {
                Source::FringeLinked => record.label.and_then(RaidLabel::as_binary),
                Source::PlatformRandom => None,
            },
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
        })
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" => Ok(Experiment::Exp1),
            "exp2" => Ok(Experiment::Exp2),
            "exp3" => Ok(Experiment::Exp3),
            other => Err(Error::Config(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub split: SplitSpec,
    pub vectorizer: VectorizerConfig,
    pub classifiers: BTreeMap<Modality, ClassifierSpec>,
    pub stacker: ClassifierSpec,
    pub average_weights: ModalityWeights,
    pub decision_threshold: f64,
    pub vote_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            split: SplitSpec::default(),
            vectorizer: VectorizerConfig::default(),
            classifiers: Modality::ALL
                .into_iter()
                .map(|m| (m, ClassifierSpec::default_for(m)))
                .collect(),
            stacker: default_stacker_spec(0),
            average_weights: ModalityWeights::default(),
            decision_threshold: 0.5,
            vote_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub round: usize,
    pub train: ClassCounts,
    pub val: ClassCounts,
    pub test: ClassCounts,
    /// Keyed by classifier name; absent when the classifier had no model or
    /// its test rows held a single class.
    pub metrics: BTreeMap<String, Metrics>,
    pub ensemble_weights: ModalityWeights,
    #[serde(skip)]
    scores: BTreeMap<String, (Vec<f64>, Vec<bool>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Metrics,
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub experiment: Experiment,
    pub seed: u64,
    pub rounds: Vec<RoundResult>,
    pub summary: BTreeMap<String, MetricSummary>,
    pub mean_ensemble_weights: ModalityWeights,
    /// ROC of the test scores pooled over all rounds.
    pub roc: BTreeMap<String, RocCurve>,
}

pub const WEIGHTED_VOTE: &str = "weighted_vote";
pub const AVERAGE_PREDICTION: &str = "average_prediction";
pub const MAJORITY_VOTE: &str = "majority_vote";

/// Experiment samples split by class, as positions into the corpus.
fn class_members(records: &[VideoRecord], experiment: Experiment) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match experiment.class_of(r) {
            Some(true) => pos.push(i),
            Some(false) => neg.push(i),
            None => {}
        }
    }
    (pos, neg)
}

fn counts(samples: &[(usize, bool)]) -> ClassCounts {
    let positive = samples.iter().filter(|s| s.1).count();
    ClassCounts {
        positive,
        negative: samples.len() - positive,
    }
}

/// A fitted featurizer and the classifier trained on its output.
#[derive(Debug, Clone)]
pub struct ModalityModel {
    pub featurizer: ModalityFeaturizer,
    pub model: TrainedModel,
}

impl ModalityModel {
    pub fn new(featurizer: ModalityFeaturizer, model: TrainedModel) -> Result<Self> {
        if featurizer.dims() != model.dims {
            return Err(Error::DimensionMismatch {
                expected: featurizer.dims(),
                got: model.dims,
            });
        }
        Ok(ModalityModel { featurizer, model })
    }
}

/// Probability from each modality model whose input the video has.
pub fn predict_probs(models: &BTreeMap<Modality, ModalityModel>, doc: &VideoDocuments) -> Result<ModalityProbs> {
    let mut probs = ModalityProbs::default();
    for (&m, mm) in models {
        if let Some(x) = mm.featurizer.transform(doc) {
            probs.set(m, Some(mm.model.predict_proba(&x)?));
        }
    }
    Ok(probs)
}

fn metrics_for(scores: &[f64], decisions: &[bool], labels: &[bool]) -> Result<Option<Metrics>> {
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Ok(None);
    }
    let prf = precision_recall_f1(decisions, labels)?;
    let roc = roc_auc(scores, labels)?;
    Ok(Some(Metrics {
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        auc: roc.auc,
    }))
}

/// One full round: split, fit featurizers and modality models on train,
/// fit the stacker on validation, score everything on test.
pub fn run_round(
    records: &[VideoRecord],
    docs: &[VideoDocuments],
    experiment: Experiment,
    cfg: &ExperimentConfig,
    round: usize,
) -> Result<RoundResult> {
    let (pos, neg) = class_members(records, experiment);
    let pos_is_minority = pos.len() <= neg.len();
    let (minority, majority) = if pos_is_minority { (&pos, &neg) } else { (&neg, &pos) };
    if minority.is_empty() {
        return Err(Error::Empty(format!("{experiment} has an empty class")));
    }
    let split = make_splits(minority.len(), majority.len(), &cfg.split, round)?;
    let pick = |which: fn(&ClassSplit) -> &Vec<usize>| -> Vec<(usize, bool)> {
        let mut out: Vec<(usize, bool)> = which(&split.minority)
            .iter()
            .map(|&i| (minority[i], pos_is_minority))
            .chain(which(&split.majority).iter().map(|&i| (majority[i], !pos_is_minority)))
            .collect();
        out.sort_unstable();
        out
    };
    let train = pick(|s| &s.train);
    let val = pick(|s| &s.val);
    let test = pick(|s| &s.test);

    let train_docs: Vec<&VideoDocuments> = train.iter().map(|&(i, _)| &docs[i]).collect();
    let mut models = BTreeMap::new();
    for (slot, m) in Modality::ALL.into_iter().enumerate() {
        let Some(featurizer) = ModalityFeaturizer::fit(m, &train_docs, &cfg.vectorizer)? else {
            continue;
        };
        let (rows, y): (Vec<_>, Vec<_>) = train
            .iter()
            .filter_map(|&(i, l)| featurizer.transform(&docs[i]).map(|x| (x, l)))
            .unzip();
        // a modality seen in only one class carries no usable signal
        if !(y.contains(&true) && y.contains(&false)) {
            continue;
        }
        let mut spec = cfg
            .classifiers
            .get(&m)
            .cloned()
            .unwrap_or_else(|| ClassifierSpec::default_for(m));
        spec.seed = derive_seed(cfg.split.seed, round, slot as u64);
        let model = classifiers::train_rows(&spec, &rows, &y, featurizer.dims())?;
        models.insert(m, ModalityModel { featurizer, model });
    }
    if models.is_empty() {
        return Err(Error::Empty("no modality could be trained".into()));
    }

    let val_probs = val
        .iter()
        .map(|&(i, _)| predict_probs(&models, &docs[i]))
        .collect::<Result<Vec<_>>>()?;
    let val_labels: Vec<bool> = val.iter().map(|s| s.1).collect();
    let mut stacker = cfg.stacker.clone();
    stacker.seed = derive_seed(cfg.split.seed, round, 3);
    let mut weighted = EnsembleModel::fit_weighted(&val_probs, &val_labels, &stacker)?;
    weighted.decision_threshold = cfg.decision_threshold;
    let mut average = EnsembleModel::average(cfg.average_weights);
    average.decision_threshold = cfg.decision_threshold;
    let mut majority_vote = EnsembleModel::majority();
    majority_vote.vote_threshold = cfg.vote_threshold;

    let test_probs = test
        .iter()
        .map(|&(i, _)| predict_probs(&models, &docs[i]))
        .collect::<Result<Vec<_>>>()?;
    let test_labels: Vec<bool> = test.iter().map(|s| s.1).collect();

    let mut scores: BTreeMap<String, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    let mut decisions: HashMap<String, Vec<bool>> = HashMap::new();
    for m in models.keys() {
        let (s, l): (Vec<f64>, Vec<bool>) = test_probs
            .iter()
            .zip(&test_labels)
            .filter_map(|(p, &l)| p.get(*m).map(|x| (x, l)))
            .unzip();
        decisions.insert(m.to_string(), s.iter().map(|&x| x >= cfg.decision_threshold).collect());
        scores.insert(m.to_string(), (s, l));
    }
    for (name, model) in [
        (WEIGHTED_VOTE, &weighted),
        (AVERAGE_PREDICTION, &average),
        (MAJORITY_VOTE, &majority_vote),
    ] {
        let out = test_probs
            .iter()
            .map(|p| model.predict(p))
            .collect::<Result<Vec<_>>>()?;
        decisions.insert(name.to_string(), out.iter().map(|d| d.raid).collect());
        scores.insert(name.to_string(), (out.iter().map(|d| d.score).collect(), test_labels.clone()));
    }

    let mut metrics = BTreeMap::new();
    for (name, (s, l)) in &scores {
        if let Some(mt) = metrics_for(s, &decisions[name], l)? {
            metrics.insert(name.clone(), mt);
        }
    }

    Ok(RoundResult {
        round,
        train: counts(&train),
        val: counts(&val),
        test: counts(&test),
        metrics,
        ensemble_weights: weighted.weights,
        scores,
    })
}

/// Runs every round (in parallel when a pool is available) and averages the
/// per-round metrics. Results do not depend on the number of workers.
pub fn run_experiment(
    records: &[VideoRecord],
    experiment: Experiment,
    resources: &TextResources,
    cfg: &ExperimentConfig,
) -> Result<EvalReport> {
    cfg.split.check()?;
    let (pos, neg) = class_members(records, experiment);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Empty(format!(
            "{experiment} needs both classes (positive {}, negative {})",
            pos.len(),
            neg.len()
        )));
    }
    let docs: Vec<VideoDocuments> = records
        .par_iter()
        .map(|r| VideoDocuments::extract(r, resources))
        .collect();
    let rounds = (0..cfg.split.rounds)
        .into_par_iter()
        .map(|round| {
            run_round(records, &docs, experiment, cfg, round).map_err(|e| Error::Round {
                round,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(experiment, cfg.split.seed, rounds))
}

fn summarize(experiment: Experiment, seed: u64, rounds: Vec<RoundResult>) -> EvalReport {
    let mut sums: BTreeMap<String, (Metrics, usize)> = BTreeMap::new();
    for r in &rounds {
        for (name, m) in &r.metrics {
            let e = sums.entry(name.clone()).or_insert((
                Metrics {
                    precision: 0.0,
                    recall: 0.0,
                    f1: 0.0,
                    auc: 0.0,
                },
                0,
            ));
            e.0.precision += m.precision;
            e.0.recall += m.recall;
            e.0.f1 += m.f1;
            e.0.auc += m.auc;
            e.1 += 1;
        }
    }
    let summary = sums
        .into_iter()
        .map(|(name, (s, n))| {
            let k = n as f64;
            let mean = Metrics {
                precision: s.precision / k,
                recall: s.recall / k,
                f1: s.f1 / k,
                auc: s.auc / k,
            };
            (name, MetricSummary { mean, rounds: n })
        })
        .collect();

    let k = rounds.len() as f64;
    let mean_ensemble_weights = ModalityWeights {
        metadata: rounds.iter().map(|r| r.ensemble_weights.metadata).sum::<f64>() / k,
        transcript: rounds.iter().map(|r| r.ensemble_weights.transcript).sum::<f64>() / k,
        thumbnail: rounds.iter().map(|r| r.ensemble_weights.thumbnail).sum::<f64>() / k,
    };

    let mut pooled: BTreeMap<String, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for r in &rounds {
        for (name, (s, l)) in &r.scores {
            let e = pooled.entry(name.clone()).or_default();
            e.0.extend(s);
            e.1.extend(l);
        }
    }
    let roc = pooled
        .into_iter()
        .filter_map(|(name, (s, l))| roc_auc(&s, &l).ok().map(|c| (name, c)))
        .collect();

    EvalReport {
        experiment,
        seed,
        rounds,
        summary,
        mean_ensemble_weights,
        roc,
    }
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `classifier,fpr,tpr` rows for every pooled ROC curve.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("classifier,fpr,tpr\n");
        for (name, curve) in &self.roc {
            for (fpr, tpr) in &curve.points {
                out.push_str(&format!("{name},{fpr:?},{tpr:?}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn split_sizes() {
        let spec = SplitSpec::default();
        let s = make_splits(1217, 14444, &spec, 0).unwrap();
        assert_eq!(s.minority.sizes(), (730, 243, 244));
        assert_eq!(s.majority.sizes(), (730, 243, 13471));
        let s = make_splits(428, 15233, &spec, 0).unwrap();
        assert_eq!(s.minority.sizes(), (256, 85, 87));
        let s = make_splits(10, 10, &spec, 0).unwrap();
        assert_eq!(s.minority.sizes(), (6, 2, 2));
        assert_eq!(s.majority.sizes(), (6, 2, 2));
        assert!(make_splits(4, 10, &spec, 0).is_err());
        assert!(make_splits(10, 9, &spec, 0).is_err());
    }

    #[test]
    fn splits_depend_on_round_and_seed() {
        let spec = SplitSpec::default();
        let a = make_splits(50, 80, &spec, 0).unwrap();
        assert_eq!(a, make_splits(50, 80, &spec, 0).unwrap());
        assert_ne!(a, make_splits(50, 80, &spec, 1).unwrap());
        let other = SplitSpec { seed: 1, ..spec };
        assert_ne!(a, make_splits(50, 80, &other, 0).unwrap());
    }

    #[test]
    fn prf_examples() {
        // TP=2, FP=1, FN=2
        let d = [true, true, true, false, false, false];
        let l = [true, true, false, true, true, false];
        let m = precision_recall_f1(&d, &l).unwrap();
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.recall, 0.5);
        assert!((m.f1 - 4.0 / 7.0).abs() < 1e-15);
        let perfect = precision_recall_f1(&l, &l).unwrap();
        assert_eq!((perfect.precision, perfect.recall, perfect.f1), (1.0, 1.0, 1.0));
        let none = precision_recall_f1(&[false; 6], &l).unwrap();
        assert_eq!((none.precision, none.f1), (0.0, 0.0));
        assert!(precision_recall_f1(&[true], &l).is_err());
    }

    #[test]
    fn auc_examples() {
        let r = roc_auc(&[0.9, 0.7, 0.8, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(r.auc, 0.75);
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[0.3; 5], &[true, false, true, false, false]).unwrap().auc, 0.5);
        assert!(matches!(roc_auc(&[0.3, 0.2], &[true, true]), Err(Error::SingleClass)));
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise(
            data in proptest::collection::vec((0u8..12, proptest::bool::ANY), 2..200)
        ) {
            let scores: Vec<f64> = data.iter().map(|d| d.0 as f64 / 11.0).collect();
            let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
            prop_assume!(labels.contains(&true) && labels.contains(&false));
            let r = roc_auc(&scores, &labels).unwrap();
            prop_assert!((r.auc - brute_auc(&scores, &labels)).abs() < 1e-12);
            for w in r.points.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
            // strictly increasing transform
            let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert_eq!(roc_auc(&warped, &labels).unwrap().auc, r.auc);
        }

        #[test]
        fn splits_disjoint_and_balanced(nmin in 5usize..200, extra in 0usize..400, round in 0usize..5) {
            let nmaj = nmin + extra;
            let s = make_splits(nmin, nmaj, &SplitSpec::default(), round).unwrap();
            for (c, n) in [(&s.minority, nmin), (&s.majority, nmaj)] {
                let mut all: Vec<usize> = c.train.iter().chain(&c.val).chain(&c.test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
            prop_assert_eq!(s.minority.train.len(), s.majority.train.len());
            prop_assert_eq!(s.minority.val.len(), s.majority.val.len());
        }
    }
}
