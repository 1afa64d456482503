//! Probabilistic binary classifiers over sparse feature vectors.

mod linear;
mod tree;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modality::Modality;
use crate::vectorizer::{FeatureMatrix, SparseVector};

pub use tree::{Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Linear,
    DecisionTree,
    RandomForest,
    ExtraTrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearLoss {
    Logistic,
    /// Hinge loss; probabilities are the logistic of the margin.
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, dims: usize) -> usize {
        let d = dims as f64;
        let k = match self {
            MaxFeatures::Sqrt => d.sqrt().floor() as usize,
            MaxFeatures::Log2 => d.log2().floor() as usize,
            MaxFeatures::All => dims,
            MaxFeatures::Count(k) => k,
            MaxFeatures::Fraction(f) => (f * d).floor() as usize,
        };
        k.clamp(1, dims.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub regularization: f64,
    pub loss: LinearLoss,
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.5,
            epochs: 30,
            regularization: 1e-4,
            loss: LinearLoss::Logistic,
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierSpec {
            kind,
            hyperparams: Hyperparams::default(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Linear models for metadata and transcripts, a random forest for thumbnails.
    pub fn default_for(modality: Modality) -> Self {
        match modality {
            Modality::Metadata | Modality::Transcript => Self::new(ClassifierKind::Linear),
            Modality::Thumbnail => Self::new(ClassifierKind::RandomForest),
        }
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check(&self) -> Result<()> {
        let hp = &self.hyperparams;
        let bad = match self.kind {
            ClassifierKind::Linear => {
                !(hp.learning_rate > 0.0) || hp.epochs == 0 || !(hp.regularization >= 0.0)
            }
            _ => {
                hp.n_trees == 0
                    || hp.min_samples_split < 2
                    || matches!(hp.max_features, MaxFeatures::Count(0))
                    || matches!(hp.max_features, MaxFeatures::Fraction(f) if !(f > 0.0 && f <= 1.0))
            }
        };
        if bad {
            Err(Error::Config(format!("invalid hyperparameters for {:?}", self.kind)))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Linear { weights: Vec<f64>, bias: f64 },
    Forest { trees: Vec<Tree> },
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ClassifierSpec,
    pub n_samples: usize,
    pub dims: usize,
    pub params: ModelParams,
}

fn check_training_set(rows: &[SparseVector], labels: &[bool], dims: usize) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Empty("training matrix has no rows".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    if let Some(r) = rows.iter().find(|r| r.dims() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            got: r.dims(),
        });
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

pub fn train(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[bool]) -> Result<TrainedModel> {
    train_rows(spec, x.rows(), y, x.dims())
}

/// Fits a model. Identical inputs and seed always give identical parameters;
/// forests use the stream `seed + tree_index` for each tree, so the thread
/// count never affects the result.
pub fn train_rows(
    spec: &ClassifierSpec,
    rows: &[SparseVector],
    y: &[bool],
    dims: usize,
) -> Result<TrainedModel> {
    spec.check()?;
    check_training_set(rows, y, dims)?;
    let hp = &spec.hyperparams;
    let params = match spec.kind {
        ClassifierKind::Linear => {
            let fit = linear::fit(rows, y, dims, hp, spec.seed);
            ModelParams::Linear {
                weights: fit.weights,
                bias: fit.bias,
            }
        }
        kind => {
            let (n_trees, bootstrap, random_thresholds, max_features) = match kind {
                ClassifierKind::DecisionTree => (1, false, false, dims),
                ClassifierKind::RandomForest => (hp.n_trees, true, false, hp.max_features.resolve(dims)),
                ClassifierKind::ExtraTrees => (hp.n_trees, false, true, hp.max_features.resolve(dims)),
                ClassifierKind::Linear => unreachable!(),
            };
            let grow = tree::GrowParams {
                max_depth: hp.max_depth,
                min_samples_split: hp.min_samples_split,
                max_features,
                random_thresholds,
            };
            let trees = (0..n_trees)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(t as u64));
                    let mut weights = vec![if bootstrap { 0 } else { 1 }; rows.len()];
                    if bootstrap {
                        for _ in 0..rows.len() {
                            weights[rng.random_range(0..rows.len())] += 1;
                        }
                    }
                    tree::grow(rows, y, &weights, grow, &mut rng)
                })
                .collect();
            ModelParams::Forest { trees }
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        n_samples: rows.len(),
        dims,
        params,
    })
}

/// Per-epoch training objective of a linear model, for diagnostics.
pub fn linear_loss_curve(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[bool]) -> Result<Vec<f64>> {
    spec.check()?;
    check_training_set(x.rows(), y, x.dims())?;
    Ok(linear::fit(x.rows(), y, x.dims(), &spec.hyperparams, spec.seed).epoch_losses)
}

impl TrainedModel {
    /// Probability that `x` belongs to the raided class.
    pub fn predict_proba(&self, x: &SparseVector) -> Result<f64> {
        if x.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                got: x.dims(),
            });
        }
        let p = match &self.params {
            ModelParams::Linear { weights, bias } => linear::sigmoid(linear::dot(weights, x) + bias),
            ModelParams::Forest { trees } => {
                trees.iter().map(|t| t.predict(x)).sum::<f64>() / trees.len() as f64
            }
        };
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        x.rows().iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn trees(&self) -> &[Tree] {
        match &self.params {
            ModelParams::Forest { trees } => trees,
            ModelParams::Linear { .. } => &[],
        }
    }

    /// Normalized importance per feature: mean-decrease-in-impurity for
    /// forests, absolute weight share for linear models. Sums to 1 unless
    /// the model is constant.
    pub fn feature_importances(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.dims];
        match &self.params {
            ModelParams::Linear { weights, .. } => {
                imp.iter_mut().zip(weights).for_each(|(i, w)| *i = w.abs());
            }
            ModelParams::Forest { trees } => {
                for t in trees {
                    t.add_importances(&mut imp);
                }
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("model file: {e}")))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Trains one model per modality on the rows whose video has a label.
/// Modalities with no labeled rows get no model.
pub fn train_modality_models(
    features: &BTreeMap<Modality, FeatureMatrix>,
    labels: &HashMap<String, bool>,
    specs: &BTreeMap<Modality, ClassifierSpec>,
) -> Result<BTreeMap<Modality, TrainedModel>> {
    let mut models = BTreeMap::new();
    for (&modality, matrix) in features {
        let (positions, y): (Vec<usize>, Vec<bool>) = matrix
            .row_ids()
            .iter()
            .enumerate()
            .filter_map(|(i, id)| labels.get(id).map(|&l| (i, l)))
            .unzip();
        if positions.is_empty() {
            continue;
        }
        let spec = specs
            .get(&modality)
            .cloned()
            .unwrap_or_else(|| ClassifierSpec::default_for(modality));
        let rows = matrix.select(&positions);
        models.insert(modality, train(&spec, &rows, &y)?);
    }
    Ok(models)
}
