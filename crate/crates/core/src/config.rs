//! Whole-pipeline configuration loaded from one JSON file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierSpec;
use crate::ensemble::{default_stacker_spec, ModalityWeights};
use crate::error::{Error, Result};
use crate::evaluation::{ExperimentConfig, SplitSpec};
use crate::features::{TextResources, VectorizerConfig};
use crate::labeling::{HateLexicon, LabelConfig};
use crate::modality::Modality;
use crate::textprep::{load_word_list, parse_word_list, CategoryMap, PosLexicon, PreprocessConfig, DEFAULT_STOPWORDS};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "RAIDRADAR_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleSettings {
    pub stacker: ClassifierSpec,
    pub average_weights: ModalityWeights,
    pub decision_threshold: f64,
    pub vote_threshold: f64,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        EnsembleSettings {
            stacker: default_stacker_spec(0),
            average_weights: ModalityWeights::default(),
            decision_threshold: 0.5,
            vote_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub lexicon: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub label: LabelConfig,
    pub preprocess: PreprocessConfig,
    pub vectorizer: VectorizerConfig,
    pub classifiers: BTreeMap<Modality, ClassifierSpec>,
    pub split: SplitSpec,
    pub ensemble: EnsembleSettings,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lexicon: None,
            categories: None,
            pos_lexicon: None,
            stopwords: None,
            label: LabelConfig::default(),
            preprocess: PreprocessConfig::default(),
            vectorizer: VectorizerConfig::default(),
            classifiers: Modality::ALL
                .into_iter()
                .map(|m| (m, ClassifierSpec::default_for(m)))
                .collect(),
            split: SplitSpec::default(),
            ensemble: EnsembleSettings::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Reads the file, resolves referenced paths relative to it and checks
    /// that they exist.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.lexicon, &mut cfg.categories, &mut cfg.pos_lexicon, &mut cfg.stopwords]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        for p in [&self.lexicon, &self.categories, &self.pos_lexicon, &self.stopwords]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file not found"),
                ));
            }
        }
        self.label.check()?;
        self.preprocess.check()?;
        self.split.check()?;
        for spec in self.classifiers.values() {
            spec.check()?;
        }
        self.ensemble.stacker.check()
    }

    /// Applies `RAIDRADAR_SEED` when it is set.
    pub fn apply_seed_env(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}=`{raw}` is not an unsigned integer")))?;
        }
        Ok(())
    }

    /// Text lexicons from the configured files, falling back to the bundled ones.
    pub fn resources(&self) -> Result<TextResources> {
        let mut preprocess = self.preprocess.clone();
        if preprocess.stopwords.is_empty() {
            preprocess.stopwords = match &self.stopwords {
                Some(p) => load_word_list(p)?,
                None => parse_word_list(DEFAULT_STOPWORDS),
            };
        }
        Ok(TextResources {
            preprocess,
            pos: match &self.pos_lexicon {
                Some(p) => PosLexicon::load(p)?,
                None => PosLexicon::builtin(),
            },
            categories: match &self.categories {
                Some(p) => CategoryMap::load(p)?,
                None => CategoryMap::builtin(),
            },
        })
    }

    pub fn hate_lexicon(&self) -> Result<Option<HateLexicon>> {
        self.lexicon.as_ref().map(HateLexicon::load).transpose()
    }

    /// Experiment settings; the pipeline seed drives every random stream.
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            split: SplitSpec {
                seed: self.seed,
                ..self.split.clone()
            },
            vectorizer: self.vectorizer.clone(),
            classifiers: self.classifiers.clone(),
            stacker: self.ensemble.stacker.clone(),
            average_weights: self.ensemble.average_weights,
            decision_threshold: self.ensemble.decision_threshold,
            vote_threshold: self.ensemble.vote_threshold,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.split.rounds, 10);
        assert_eq!(cfg.label.hcps_raid_threshold, 1e-4);
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("lex.txt"), "slur1\n").unwrap();
        let cfg_path = dir.path().join("cfg.json");
        std::fs::write(&cfg_path, r#"{"lexicon": "lex.txt", "seed": 5}"#).unwrap();
        let cfg = PipelineConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.lexicon.as_deref(), Some(dir.path().join("lex.txt").as_path()));
        assert!(cfg.hate_lexicon().unwrap().unwrap().contains("slur1"));
        assert_eq!(cfg.experiment().split.seed, 5);
    }

    #[test]
    fn missing_referenced_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("cfg.json");
        std::fs::write(&cfg_path, r#"{"stopwords": "nope.txt"}"#).unwrap();
        let err = PipelineConfig::load(&cfg_path).unwrap_err();
        assert!(err.to_string().contains("nope.txt"));
        assert!(err.is_data_error());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = PipelineConfig::default();
        cfg.split.train_frac = 0.9;
        assert!(cfg.check().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.label.bin_width_s = 0;
        assert!(cfg.check().is_err());
    }
}
