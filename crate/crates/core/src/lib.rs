//! Proactive raid-risk scoring for videos.
//!
//! Videos are labeled from their comment timelines, turned into TF-IDF
//! features per modality (metadata, audio transcript, thumbnail captions),
//! scored by one probabilistic classifier per modality, and the modality
//! probabilities are combined by a weighted-vote stacker, an average, or a
//! majority vote.

pub mod classifiers;
pub mod config;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod labeling;
pub mod modality;
pub mod synthetic;
pub mod textprep;
pub mod vectorizer;

pub use error::{Error, Result};
pub use modality::Modality;
