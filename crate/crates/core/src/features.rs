//! Per-modality documents and the fitted featurizers that turn them into
//! sparse vectors.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::VideoRecord;
use crate::error::{Error, Result};
use crate::modality::Modality;
use crate::textprep::{
    filter_transcript, parse_word_list, process_caption, tokenize, topics, CategoryMap, PosLexicon,
    PreprocessConfig, DEFAULT_STOPWORDS,
};
use crate::vectorizer::{
    assemble_metadata, FeatureMatrix, MetadataDocument, SparseVector, Vocabulary, DEFAULT_DURATION_EDGES,
};

/// Lexicons and settings shared by all text preprocessing.
#[derive(Debug, Clone)]
pub struct TextResources {
    pub preprocess: PreprocessConfig,
    pub pos: PosLexicon,
    pub categories: CategoryMap,
}

impl TextResources {
    /// Bundled stopwords, POS lexicon and the twelve-topic category map.
    pub fn builtin() -> Self {
        TextResources {
            preprocess: PreprocessConfig {
                stopwords: parse_word_list(DEFAULT_STOPWORDS),
                ..PreprocessConfig::default()
            },
            pos: PosLexicon::builtin(),
            categories: CategoryMap::builtin(),
        }
    }
}

/// Prefix of the pseudo-tokens that carry caption topics.
pub const TOPIC_PREFIX: &str = "topic:";

/// Preprocessed text of one video for every modality it has.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoDocuments {
    pub metadata: MetadataDocument,
    pub transcript: Option<Vec<String>>,
    pub thumbnail: Option<Vec<String>>,
}

impl VideoDocuments {
    pub fn extract(record: &VideoRecord, res: &TextResources) -> Self {
        let prep = &res.preprocess;
        let mut text = tokenize(&record.title);
        for tag in &record.tags {
            text.extend(tokenize(tag));
        }
        text.extend(tokenize(&record.description));
        let metadata = MetadataDocument {
            tokens: prep.normalize(text),
            category: record.category.clone(),
            duration_s: record.duration_s,
        };

        let transcript = (!record.transcript.is_empty())
            .then(|| prep.normalize(filter_transcript(&record.transcript, prep)));

        let thumbnail = (!record.captions.is_empty()).then(|| {
            let mut tokens: Vec<String> = record
                .captions
                .iter()
                .flat_map(|c| process_caption(c, &res.pos))
                .filter(|t| !prep.stopwords.contains(t))
                .collect();
            let found = topics(&tokens, &res.categories);
            tokens.extend(found.into_iter().map(|t| format!("{TOPIC_PREFIX}{t}")));
            tokens
        });

        VideoDocuments {
            metadata,
            transcript,
            thumbnail,
        }
    }

    pub fn tokens(&self, modality: Modality) -> Option<&[String]> {
        match modality {
            Modality::Metadata => Some(&self.metadata.tokens),
            Modality::Transcript => self.transcript.as_deref(),
            Modality::Thumbnail => self.thumbnail.as_deref(),
        }
    }

    pub fn has(&self, modality: Modality) -> bool {
        self.tokens(modality).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VectorizerConfig {
    pub min_df: usize,
    pub l2_normalize: bool,
    pub duration_edges: Vec<f64>,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            min_df: 1,
            l2_normalize: true,
            duration_edges: DEFAULT_DURATION_EDGES.to_vec(),
        }
    }
}

/// A vocabulary fitted on one modality's training documents, plus the
/// structured metadata blocks when the modality is metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityFeaturizer {
    pub modality: Modality,
    pub vocabulary: Vocabulary,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub duration_edges: Vec<f64>,
    pub l2_normalize: bool,
}

impl ModalityFeaturizer {
    /// Fits on the documents that have this modality. Returns `None` when none do.
    pub fn fit(modality: Modality, docs: &[&VideoDocuments], cfg: &VectorizerConfig) -> Result<Option<Self>> {
        let texts: Vec<&[String]> = docs.iter().filter_map(|d| d.tokens(modality)).collect();
        if texts.is_empty() {
            return Ok(None);
        }
        let vocabulary = Vocabulary::fit(&texts, cfg.min_df)?;
        let (categories, duration_edges) = if modality == Modality::Metadata {
            let cats: BTreeSet<&str> = docs.iter().map(|d| d.metadata.category.as_str()).collect();
            (cats.into_iter().map(String::from).collect(), cfg.duration_edges.clone())
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Some(ModalityFeaturizer {
            modality,
            vocabulary,
            categories,
            duration_edges,
            l2_normalize: cfg.l2_normalize,
        }))
    }

    pub fn dims(&self) -> usize {
        match self.modality {
            Modality::Metadata => self.vocabulary.len() + self.categories.len() + self.duration_edges.len() + 1,
            _ => self.vocabulary.len(),
        }
    }

    pub fn transform(&self, doc: &VideoDocuments) -> Option<SparseVector> {
        match self.modality {
            Modality::Metadata => Some(assemble_metadata(
                &doc.metadata,
                &self.vocabulary,
                &self.categories,
                &self.duration_edges,
                self.l2_normalize,
            )),
            m => doc
                .tokens(m)
                .map(|t| self.vocabulary.transform(t, self.l2_normalize)),
        }
    }

    /// Rows for the videos that have this modality, in input order.
    pub fn matrix<'a, I>(&self, docs: I) -> FeatureMatrix
    where
        I: IntoIterator<Item = (&'a str, &'a VideoDocuments)>,
    {
        let (ids, rows): (Vec<String>, Vec<SparseVector>) = docs
            .into_iter()
            .filter_map(|(id, d)| self.transform(d).map(|v| (id.to_string(), v)))
            .unzip();
        FeatureMatrix::new(self.dims(), rows, ids).expect("featurizer rows share dims")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("featurizer serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Source, TranscriptToken};

    fn record() -> VideoRecord {
        let mut r = VideoRecord::new("v1", Source::FringeLinked);
        r.title = "The Running Man".into();
        r.tags = vec!["Police News".into()];
        r.description = "cats and dogs".into();
        r.category = "News".into();
        r.duration_s = 90.0;
        r.transcript = vec![
            TranscriptToken { token: "uh".into(), confidence: 0.9 },
            TranscriptToken { token: "uh".into(), confidence: 0.9 },
            TranscriptToken { token: "protest".into(), confidence: 0.3 },
            TranscriptToken { token: "[laughter]".into(), confidence: 0.8 },
            TranscriptToken { token: "marching".into(), confidence: 0.8 },
        ];
        r.captions = vec!["a man in a suit and tie".into()];
        r
    }

    #[test]
    fn extracts_each_modality() {
        let docs = VideoDocuments::extract(&record(), &TextResources::builtin());
        assert_eq!(docs.metadata.tokens, vec!["run", "man", "polic", "news", "cat", "dog"]);
        assert_eq!(docs.transcript.as_deref().unwrap(), ["uh", "[laughter]", "march"]);
        let thumb = docs.thumbnail.as_deref().unwrap();
        assert_eq!(&thumb[..3], ["man", "suit", "tie"]);
        assert!(thumb.contains(&"topic:clothing".to_string()));
        assert!(thumb.contains(&"topic:male-gender".to_string()));
    }

    #[test]
    fn absent_modalities() {
        let mut r = record();
        r.transcript.clear();
        r.captions.clear();
        let docs = VideoDocuments::extract(&r, &TextResources::builtin());
        assert!(!docs.has(Modality::Transcript) && !docs.has(Modality::Thumbnail));
        assert!(ModalityFeaturizer::fit(Modality::Thumbnail, &[&docs], &VectorizerConfig::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn metadata_featurizer_dims() {
        let docs = VideoDocuments::extract(&record(), &TextResources::builtin());
        let f = ModalityFeaturizer::fit(Modality::Metadata, &[&docs], &VectorizerConfig::default())
            .unwrap()
            .unwrap();
        assert_eq!(f.dims(), 6 + 1 + 5);
        let m = f.matrix([("v1", &docs)]);
        assert_eq!(m.dims(), f.dims());
        assert_eq!(m.row_ids(), ["v1".to_string()]);
        // category slot and the 60..300 s duration bucket
        assert_eq!(m.row(0).get(6), 1.0);
        assert_eq!(m.row(0).get(8), 1.0);
    }
}
