//! Combining per-modality probabilities into one raid decision.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{self, ClassifierKind, ClassifierSpec, MaxFeatures, TrainedModel};
use crate::error::{Error, Result};
use crate::modality::Modality;
use crate::vectorizer::SparseVector;

/// Stacker input used for a modality with no prediction.
pub const MISSING_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModalityProbs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail: Option<f64>,
}

impl ModalityProbs {
    pub fn new(metadata: Option<f64>, transcript: Option<f64>, thumbnail: Option<f64>) -> Self {
        ModalityProbs {
            metadata,
            transcript,
            thumbnail,
        }
    }

    pub fn get(&self, m: Modality) -> Option<f64> {
        match m {
            Modality::Metadata => self.metadata,
            Modality::Transcript => self.transcript,
            Modality::Thumbnail => self.thumbnail,
        }
    }

    pub fn set(&mut self, m: Modality, p: Option<f64>) {
        match m {
            Modality::Metadata => self.metadata = p,
            Modality::Transcript => self.transcript = p,
            Modality::Thumbnail => self.thumbnail = p,
        }
    }

    pub fn present(&self) -> impl Iterator<Item = (Modality, f64)> + '_ {
        Modality::ALL
            .into_iter()
            .filter_map(|m| self.get(m).map(|p| (m, p)))
    }

    pub fn check(&self) -> Result<()> {
        if self.present().next().is_none() {
            return Err(Error::NoModality);
        }
        match self.present().find(|(_, p)| !(0.0..=1.0).contains(p)) {
            Some((m, p)) => Err(Error::Domain(format!("{m} probability {p} outside [0, 1]"))),
            None => Ok(()),
        }
    }

    /// Dense stacker input in [`Modality::ALL`] order; gaps become
    /// [`MISSING_PROBABILITY`].
    pub fn imputed(&self) -> [f64; 3] {
        Modality::ALL.map(|m| self.get(m).unwrap_or(MISSING_PROBABILITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalityWeights {
    pub metadata: f64,
    pub transcript: f64,
    pub thumbnail: f64,
}

impl Default for ModalityWeights {
    fn default() -> Self {
        ModalityWeights {
            metadata: 1.0,
            transcript: 1.0,
            thumbnail: 1.0,
        }
    }
}

impl ModalityWeights {
    pub fn get(&self, m: Modality) -> f64 {
        match m {
            Modality::Metadata => self.metadata,
            Modality::Transcript => self.transcript,
            Modality::Thumbnail => self.thumbnail,
        }
    }

    fn from_array(w: [f64; 3]) -> Self {
        ModalityWeights {
            metadata: w[0],
            transcript: w[1],
            thumbnail: w[2],
        }
    }

    /// Weights scaled to sum to one (unchanged if they sum to zero).
    pub fn normalized(&self) -> Self {
        let total = self.metadata + self.transcript + self.thumbnail;
        if total > 0.0 {
            ModalityWeights::from_array(Modality::ALL.map(|m| self.get(m) / total))
        } else {
            *self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    WeightedVote,
    AveragePrediction,
    MajorityVote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub mode: EnsembleMode,
    pub weights: ModalityWeights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stacker: Option<TrainedModel>,
    pub vote_threshold: f64,
    pub decision_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDecision {
    pub raid: bool,
    pub score: f64,
}

/// Extremely randomized trees over the three modality probabilities.
pub fn default_stacker_spec(seed: u64) -> ClassifierSpec {
    let mut spec = ClassifierSpec::new(ClassifierKind::ExtraTrees).with_seed(seed);
    spec.hyperparams.n_trees = 100;
    spec.hyperparams.max_features = MaxFeatures::All;
    spec
}

impl EnsembleModel {
    pub fn average(weights: ModalityWeights) -> Self {
        EnsembleModel {
            mode: EnsembleMode::AveragePrediction,
            weights,
            stacker: None,
            vote_threshold: 0.5,
            decision_threshold: 0.5,
        }
    }

    pub fn majority() -> Self {
        EnsembleModel {
            mode: EnsembleMode::MajorityVote,
            ..Self::average(ModalityWeights::default())
        }
    }

    /// Fits a weighted-vote ensemble on held-out validation predictions. The
    /// stacker's normalized feature importances become the reported weights.
    pub fn fit_weighted(validation: &[ModalityProbs], labels: &[bool], stacker: &ClassifierSpec) -> Result<Self> {
        if validation.is_empty() {
            return Err(Error::Empty("validation set is empty".into()));
        }
        for p in validation {
            p.check()?;
        }
        let rows: Vec<SparseVector> = validation
            .iter()
            .map(|p| SparseVector::from_dense(&p.imputed()))
            .collect();
        let model = classifiers::train_rows(stacker, &rows, labels, Modality::ALL.len())?;
        let imp = model.feature_importances();
        Ok(EnsembleModel {
            mode: EnsembleMode::WeightedVote,
            weights: ModalityWeights::from_array([imp[0], imp[1], imp[2]]),
            stacker: Some(model),
            vote_threshold: 0.5,
            decision_threshold: 0.5,
        })
    }

    pub fn predict(&self, probs: &ModalityProbs) -> Result<EnsembleDecision> {
        probs.check()?;
        match self.mode {
            EnsembleMode::AveragePrediction => {
                let used: Vec<f64> = probs
                    .present()
                    .filter(|&(m, _)| self.weights.get(m) != 0.0)
                    .map(|(_, p)| p)
                    .collect();
                // only zero-weighted modalities present: no usable evidence
                let score = if used.is_empty() {
                    MISSING_PROBABILITY
                } else {
                    used.iter().sum::<f64>() / used.len() as f64
                };
                Ok(self.thresholded(score))
            }
            EnsembleMode::MajorityVote => {
                let present = probs.present().count();
                let votes = probs.present().filter(|&(_, p)| p >= self.vote_threshold).count();
                Ok(EnsembleDecision {
                    raid: 2 * votes >= present,
                    score: votes as f64 / present as f64,
                })
            }
            EnsembleMode::WeightedVote => {
                let stacker = self
                    .stacker
                    .as_ref()
                    .ok_or_else(|| Error::Config("weighted-vote ensemble has no stacker".into()))?;
                let score = stacker.predict_proba(&SparseVector::from_dense(&probs.imputed()))?;
                Ok(self.thresholded(score))
            }
        }
    }

    fn thresholded(&self, score: f64) -> EnsembleDecision {
        EnsembleDecision {
            raid: score >= self.decision_threshold,
            score,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("ensemble serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: EnsembleModel = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if model.mode == EnsembleMode::WeightedVote && model.stacker.is_none() {
            return Err(Error::Config("weighted-vote ensemble without stacker".into()));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn three(a: f64, b: f64, c: f64) -> ModalityProbs {
        ModalityProbs::new(Some(a), Some(b), Some(c))
    }

    #[test]
    fn average_examples() {
        let avg = EnsembleModel::average(ModalityWeights::default());
        let d = avg.predict(&three(0.8, 0.6, 0.4)).unwrap();
        assert!((d.score - 0.6).abs() < 1e-15);
        assert!(d.raid);

        let no_thumb = EnsembleModel::average(ModalityWeights {
            thumbnail: 0.0,
            ..ModalityWeights::default()
        });
        assert!((no_thumb.predict(&three(0.8, 0.6, 0.4)).unwrap().score - 0.7).abs() < 1e-15);
    }

    #[test]
    fn majority_examples() {
        let maj = EnsembleModel::majority();
        let d = maj.predict(&three(0.8, 0.6, 0.4)).unwrap();
        assert!(d.raid);
        let tie = maj
            .predict(&ModalityProbs::new(Some(0.8), Some(0.2), None))
            .unwrap();
        assert!(tie.raid);
        assert_eq!(tie.score, 0.5);
        let no = maj.predict(&three(0.1, 0.6, 0.4)).unwrap();
        assert!(!no.raid);
    }

    #[test]
    fn missing_modalities() {
        let avg = EnsembleModel::average(ModalityWeights::default());
        let d = avg
            .predict(&ModalityProbs::new(None, Some(0.3), None))
            .unwrap();
        assert_eq!(d.score, 0.3);
        assert!(matches!(
            avg.predict(&ModalityProbs::default()),
            Err(Error::NoModality)
        ));
        let no_thumb = EnsembleModel::average(ModalityWeights {
            thumbnail: 0.0,
            ..ModalityWeights::default()
        });
        let only_thumb = ModalityProbs::new(None, None, Some(0.9));
        assert_eq!(no_thumb.predict(&only_thumb).unwrap().score, MISSING_PROBABILITY);
    }

    #[test]
    fn rejects_out_of_range() {
        let avg = EnsembleModel::average(ModalityWeights::default());
        assert!(avg.predict(&three(1.5, 0.1, 0.1)).is_err());
    }

    fn planted_validation(seed: u64, n: usize) -> (Vec<ModalityProbs>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = i % 2 == 0;
                let meta = if label { 1.0 } else { 0.0 };
                (three(meta, rng.random(), rng.random()), label)
            })
            .unzip()
    }

    #[test]
    fn planted_metadata_signal_gets_the_weight() {
        let (probs, labels) = planted_validation(1, 200);
        let e = EnsembleModel::fit_weighted(&probs, &labels, &default_stacker_spec(3)).unwrap();
        assert!(e.weights.metadata > 0.95, "{:?}", e.weights);
        assert!(e.weights.transcript < 0.05 && e.weights.thumbnail < 0.05);
        let sum = e.weights.metadata + e.weights.transcript + e.weights.thumbnail;
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(e.predict(&three(1.0, 0.2, 0.7)).unwrap().raid);
        assert!(!e.predict(&three(0.0, 0.2, 0.7)).unwrap().raid);
    }

    #[test]
    fn identical_inputs_share_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (probs, labels): (Vec<_>, Vec<_>) = (0..300)
            .map(|_| {
                let label = rng.random_bool(0.5);
                let p: f64 = if label {
                    rng.random_range(0.3..1.0)
                } else {
                    rng.random_range(0.0..0.7)
                };
                (three(p, p, p), label)
            })
            .unzip();
        let e = EnsembleModel::fit_weighted(&probs, &labels, &default_stacker_spec(5)).unwrap();
        let w = e.weights;
        for x in [w.metadata, w.transcript, w.thumbnail] {
            assert!((x - 1.0 / 3.0).abs() < 0.15, "{w:?}");
        }
    }

    #[test]
    fn fit_weighted_errors() {
        assert!(EnsembleModel::fit_weighted(&[], &[], &default_stacker_spec(0)).is_err());
        let probs = vec![three(0.1, 0.2, 0.3); 4];
        assert!(matches!(
            EnsembleModel::fit_weighted(&probs, &[true; 4], &default_stacker_spec(0)),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn serialization_round_trip() {
        let (probs, labels) = planted_validation(4, 40);
        let e = EnsembleModel::fit_weighted(&probs, &labels, &default_stacker_spec(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.json");
        e.save(&path).unwrap();
        assert_eq!(EnsembleModel::load(&path).unwrap(), e);
    }

    fn arb_probs() -> impl Strategy<Value = ModalityProbs> {
        let p = proptest::option::of(0.0f64..=1.0);
        (p.clone(), p.clone(), p)
            .prop_filter("one present", |(a, b, c)| a.is_some() || b.is_some() || c.is_some())
            .prop_map(|(a, b, c)| ModalityProbs::new(a, b, c))
    }

    proptest! {
        #[test]
        fn scores_in_unit_interval(p in arb_probs()) {
            for e in [EnsembleModel::average(ModalityWeights::default()), EnsembleModel::majority()] {
                let d = e.predict(&p).unwrap();
                prop_assert!((0.0..=1.0).contains(&d.score));
                if e.mode == EnsembleMode::AveragePrediction {
                    prop_assert_eq!(d.raid, d.score >= e.decision_threshold);
                }
            }
        }

        #[test]
        fn average_is_permutation_invariant(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
            let e = EnsembleModel::average(ModalityWeights::default());
            let s1 = e.predict(&three(a, b, c)).unwrap().score;
            let s2 = e.predict(&three(c, a, b)).unwrap().score;
            prop_assert!((s1 - s2).abs() < 1e-15);
        }

        #[test]
        fn majority_invariant_under_monotone_maps(p in arb_probs()) {
            let e = EnsembleModel::majority();
            // strictly increasing and fixes 0.5
            let f = |x: f64| 0.5 + (x - 0.5).powi(3) * 4.0;
            let mut q = p;
            for m in Modality::ALL {
                q.set(m, p.get(m).map(f));
            }
            prop_assert_eq!(e.predict(&p).unwrap().raid, e.predict(&q).unwrap().raid);
        }

        #[test]
        fn averaged_votes_reproduce_majority(p in arb_probs()) {
            let votes = p.present().filter(|&(_, x)| x >= 0.5).count();
            let n = p.present().count();
            prop_assume!(2 * votes != n);
            let mut v = p;
            for m in Modality::ALL {
                v.set(m, p.get(m).map(|x| if x >= 0.5 { 1.0 } else { 0.0 }));
            }
            let avg = EnsembleModel::average(ModalityWeights::default()).predict(&v).unwrap();
            prop_assert_eq!(avg.raid, EnsembleModel::majority().predict(&p).unwrap().raid);
        }
    }
}
