//! Generated corpora with a known amount of class signal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CommentEvent, Source, ThreadLink, TranscriptToken, VideoRecord};
use crate::labeling::RaidLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedCorpusConfig {
    pub n_raided: usize,
    pub n_non_raided: usize,
    /// Share of non-raided videos that are fringe-linked rather than random.
    pub fringe_non_raided_share: f64,
    pub n_signal_terms: usize,
    /// Chance that a given signal term appears in a raided video's document.
    pub p_signal_raided: f64,
    pub p_signal_non_raided: f64,
    pub background_vocab: usize,
    pub background_words: usize,
    pub seed: u64,
}

impl Default for PlantedCorpusConfig {
    fn default() -> Self {
        PlantedCorpusConfig {
            n_raided: 400,
            n_non_raided: 4000,
            fringe_non_raided_share: 0.2,
            n_signal_terms: 50,
            p_signal_raided: 0.3,
            p_signal_non_raided: 0.02,
            background_vocab: 2000,
            background_words: 20,
            seed: 0,
        }
    }
}

const CATEGORIES: [&str; 5] = ["News", "Music", "Gaming", "Education", "Comedy"];
const HATE_TERM: &str = "slur1";
const BASE_TIME: i64 = 1_500_000_000;

fn signal_term(i: usize) -> String {
    format!("sig{i}")
}

fn background(rng: &mut ChaCha8Rng, cfg: &PlantedCorpusConfig) -> String {
    format!("bg{}", rng.random_range(0..cfg.background_vocab.max(1)))
}

fn document(rng: &mut ChaCha8Rng, cfg: &PlantedCorpusConfig, raided: bool) -> Vec<String> {
    let p = if raided { cfg.p_signal_raided } else { cfg.p_signal_non_raided };
    let mut words: Vec<String> = (0..cfg.background_words).map(|_| background(rng, cfg)).collect();
    for i in 0..cfg.n_signal_terms {
        if rng.random_bool(p) {
            let at = rng.random_range(0..=words.len());
            words.insert(at, signal_term(i));
        }
    }
    words
}

/// Raided videos get a thread with comments in the same hours, some of them
/// hateful; fringe non-raided videos get clean comments three days after the
/// thread. With the default label settings and a lexicon holding `slur1`,
/// labeling reproduces the planted labels.
pub fn planted_corpus(cfg: &PlantedCorpusConfig) -> Vec<VideoRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = cfg.n_raided + cfg.n_non_raided;
    let mut records = Vec::with_capacity(total);
    for i in 0..total {
        let raided = i < cfg.n_raided;
        let fringe = raided || rng.random_bool(cfg.fringe_non_raided_share);
        let source = if fringe { Source::FringeLinked } else { Source::PlatformRandom };
        let mut r = VideoRecord::new(format!("vid{i:05}"), source);

        let meta = document(&mut rng, cfg, raided);
        let split = meta.len() / 3;
        r.title = meta[..split].join(" ");
        r.description = meta[split..].join(" ");
        r.tags = vec![background(&mut rng, cfg)];
        r.category = CATEGORIES[rng.random_range(0..CATEGORIES.len())].to_string();
        r.duration_s = rng.random_range(10.0..5000.0_f64).round();

        let mut transcript: Vec<TranscriptToken> = document(&mut rng, cfg, raided)
            .into_iter()
            .map(|token| TranscriptToken {
                token,
                confidence: rng.random_range(0.5..=1.0),
            })
            .collect();
        // misheard words that filtering should drop
        for _ in 0..3 {
            let at = rng.random_range(0..=transcript.len());
            let token = background(&mut rng, cfg);
            transcript.insert(at, TranscriptToken { token, confidence: rng.random_range(0.0..0.5) });
        }
        r.transcript = transcript;
        r.captions = vec![document(&mut rng, cfg, raided).join(" ")];

        let start = BASE_TIME + i as i64 * 10_000;
        let posts: Vec<i64> = (0..8).map(|_| start + rng.random_range(0..7200)).collect();
        let (offset, hateful_every) = if raided { (0, 3) } else { (3 * 86_400, 0) };
        r.comments = (0..24)
            .map(|k| {
                let base = posts[k % posts.len()];
                let text = if hateful_every > 0 && k % hateful_every == 0 {
                    format!("{HATE_TERM} {}", background(&mut rng, cfg))
                } else {
                    background(&mut rng, cfg)
                };
                CommentEvent {
                    timestamp_s: base + offset + rng.random_range(0..600),
                    text,
                }
            })
            .collect();
        if fringe {
            r.thread_link = Some(ThreadLink {
                thread_id: format!("thread{i}"),
                post_timestamps_s: posts,
            });
        }
        r.label = Some(if raided { RaidLabel::Raided } else { RaidLabel::NonRaided });
        r.normalize();
        records.push(r);
    }
    records
}
