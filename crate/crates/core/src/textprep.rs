//! Tokenization and per-modality text normalization.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::corpus::TranscriptToken;
use crate::error::{Error, Result};
use crate::labeling::RaidLabel;

pub const DEFAULT_CATEGORIES: &str = include_str!("../data/categories.json");
pub const DEFAULT_POS_LEXICON: &str = include_str!("../data/pos_lexicon.json");
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub min_transcript_confidence: f64,
    pub exclamation_tokens: BTreeSet<String>,
    pub stopwords: BTreeSet<String>,
    pub stemming_enabled: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_transcript_confidence: 0.5,
            exclamation_tokens: ["uh", "um", "hm", "ah", "oh", "eh"]
                .into_iter()
                .map(String::from)
                .collect(),
            stopwords: BTreeSet::new(),
            stemming_enabled: true,
        }
    }
}

impl PreprocessConfig {
    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_transcript_confidence) {
            return Err(Error::Config(format!(
                "min_transcript_confidence {} outside [0, 1]",
                self.min_transcript_confidence
            )));
        }
        Ok(())
    }

    /// Drops stopwords and stems what remains (when enabled).
    pub fn normalize(&self, tokens: impl IntoIterator<Item = String>) -> Vec<String> {
        tokens
            .into_iter()
            .filter(|t| !self.stopwords.contains(t))
            .map(|t| if self.stemming_enabled { stem(&t) } else { t })
            .collect()
    }
}

fn is_tag(token: &str) -> bool {
    token.len() > 2 && token.starts_with('[') && token.ends_with(']')
}

fn is_tag_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// Lowercase alphanumeric runs. A bracketed word such as `[noise]` is kept
/// whole, brackets included.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '[' {
            let end = chars[i + 1..]
                .iter()
                .position(|&d| !is_tag_char(d))
                .map(|p| p + i + 1);
            if let Some(end) = end.filter(|&e| e > i + 1 && chars[e] == ']') {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                let inner: String = chars[i + 1..end].iter().collect();
                tokens.push(format!("[{}]", inner.to_lowercase()));
                i = end + 1;
                continue;
            }
        }
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        i += 1;
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// English suffix stripping, iterated to a fixed point so that the result is
/// stable under repeated application. Bracketed tags pass through unchanged.
pub fn stem(token: &str) -> String {
    if is_tag(token) {
        return token.to_string();
    }
    let mut current = token.to_string();
    // The English stemmer never lengthens its input, so this converges fast.
    for _ in 0..16 {
        let next = stemmer().stem(&current).into_owned();
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Drops low-confidence words and collapses runs of repeated exclamations.
/// Bracketed non-verbal tags are kept.
pub fn filter_transcript(tokens: &[TranscriptToken], cfg: &PreprocessConfig) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    for t in tokens {
        if t.confidence < cfg.min_transcript_confidence {
            continue;
        }
        let word = if is_tag(&t.token) {
            t.token.to_lowercase()
        } else {
            t.token.trim().to_lowercase()
        };
        if word.is_empty() {
            continue;
        }
        if cfg.exclamation_tokens.contains(&word) && out.last() == Some(&word) {
            continue;
        }
        out.push(word);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Other,
}

impl PosTag {
    fn is_content(self) -> bool {
        !matches!(self, PosTag::Other)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PosLexicon {
    tags: HashMap<String, PosTag>,
}

impl PosLexicon {
    pub fn new(tags: HashMap<String, PosTag>) -> Self {
        PosLexicon {
            tags: tags
                .into_iter()
                .map(|(w, t)| (w.to_lowercase(), t))
                .collect(),
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let tags: HashMap<String, PosTag> = serde_json::from_str(json)
            .map_err(|e| Error::Config(format!("POS lexicon: {e}")))?;
        Ok(PosLexicon::new(tags))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_POS_LEXICON).expect("bundled POS lexicon is valid")
    }

    pub fn tag(&self, word: &str) -> Option<PosTag> {
        self.tags.get(word).copied()
    }
}

/// Keeps nouns, verbs, adjectives and adverbs (and words the lexicon does not
/// know), then stems them.
pub fn process_caption(caption: &str, pos: &PosLexicon) -> Vec<String> {
    tokenize(caption)
        .into_iter()
        .filter(|t| pos.tag(t).is_none_or(PosTag::is_content))
        .map(|t| stem(&t))
        .collect()
}

/// Topic name to member words. Membership also matches the stemmed form of
/// each member, so stemmed caption tokens still resolve to their topic.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMap {
    members: BTreeMap<String, BTreeSet<String>>,
    expanded: BTreeMap<String, HashSet<String>>,
}

impl CategoryMap {
    pub fn new(members: BTreeMap<String, BTreeSet<String>>) -> Result<Self> {
        let mut lowered = BTreeMap::new();
        for (topic, words) in members {
            if words.is_empty() {
                return Err(Error::Config(format!("topic `{topic}` has no member words")));
            }
            let words: BTreeSet<String> = words.into_iter().map(|w| w.to_lowercase()).collect();
            lowered.insert(topic, words);
        }
        let expanded = lowered
            .iter()
            .map(|(topic, words)| {
                let all = words
                    .iter()
                    .flat_map(|w| [w.clone(), stem(w)])
                    .collect::<HashSet<_>>();
                (topic.clone(), all)
            })
            .collect();
        Ok(CategoryMap {
            members: lowered,
            expanded,
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let map: BTreeMap<String, BTreeSet<String>> = serde_json::from_str(json)
            .map_err(|e| Error::Config(format!("category map: {e}")))?;
        Self::new(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The twelve bundled topics.
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_CATEGORIES).expect("bundled category map is valid")
    }

    pub fn topic_names(&self) -> impl Iterator<Item = &str> {
        self.members.keys().map(String::as_str)
    }

    pub fn members(&self, topic: &str) -> Option<&BTreeSet<String>> {
        self.members.get(topic)
    }
}

pub fn topics(tokens: &[String], map: &CategoryMap) -> BTreeSet<String> {
    map.expanded
        .iter()
        .filter(|(_, words)| tokens.iter().any(|t| words.contains(t)))
        .map(|(topic, _)| topic.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPrevalence {
    pub topic: String,
    /// Percentage (0 to 100) of non-raided videos showing the topic.
    pub non_raided_pct: f64,
    pub raided_pct: f64,
    pub difference: f64,
}

/// Share of videos per class whose captions touch each topic, largest
/// between-class gap first.
pub fn topic_prevalence(
    corpus: &[(Vec<String>, RaidLabel)],
    map: &CategoryMap,
) -> Result<Vec<TopicPrevalence>> {
    let mut counts: BTreeMap<&str, [usize; 2]> = map.topic_names().map(|t| (t, [0, 0])).collect();
    let mut class_sizes = [0usize; 2];
    for (i, (tokens, label)) in corpus.iter().enumerate() {
        let class = match label {
            RaidLabel::NonRaided => 0,
            RaidLabel::Raided => 1,
            RaidLabel::Unlabeled => {
                return Err(Error::Domain(format!(
                    "topic prevalence needs raided/non-raided labels; entry {i} is unlabeled"
                )))
            }
        };
        class_sizes[class] += 1;
        for topic in topics(tokens, map) {
            if let Some(c) = counts.get_mut(topic.as_str()) {
                c[class] += 1;
            }
        }
    }
    if class_sizes.contains(&0) {
        return Err(Error::Empty("topic prevalence needs both classes".into()));
    }
    let mut rows: Vec<TopicPrevalence> = counts
        .into_iter()
        .map(|(topic, [non, raid])| {
            let non_raided_pct = 100.0 * non as f64 / class_sizes[0] as f64;
            let raided_pct = 100.0 * raid as f64 / class_sizes[1] as f64;
            TopicPrevalence {
                topic: topic.to_string(),
                non_raided_pct,
                raided_pct,
                difference: (raided_pct - non_raided_pct).abs(),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.difference.total_cmp(&a.difference).then_with(|| a.topic.cmp(&b.topic)));
    Ok(rows)
}

/// Newline-delimited word list; blank lines and `#` comments are skipped.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn load_word_list(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tt(token: &str, confidence: f64) -> TranscriptToken {
        TranscriptToken {
            token: token.into(),
            confidence,
        }
    }

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_basic() {
        assert_eq!(tokenize("Hello, World"), strings(&["hello", "world"]));
        assert_eq!(tokenize("[noise] stop"), strings(&["[noise]", "stop"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("[ broken"), strings(&["broken"]));
        assert_eq!(tokenize("a[LAUGHTER]b"), strings(&["a", "[laughter]", "b"]));
        assert_eq!(tokenize("[]x"), strings(&["x"]));
    }

    #[test]
    fn stem_hand_list() {
        // Reference forms of the English (Porter2) stemmer.
        let cases = [
            ("running", "run"),
            ("cat", "cat"),
            ("cats", "cat"),
            ("runs", "run"),
            ("jumped", "jump"),
            ("jumping", "jump"),
            ("happiness", "happi"),
            ("happy", "happi"),
            ("connection", "connect"),
            ("connected", "connect"),
            ("hopping", "hop"),
            ("hoped", "hope"),
            ("smiling", "smile"),
            ("generously", "generous"),
            ("ponies", "poni"),
            ("caresses", "caress"),
            ("relational", "relat"),
            ("sitting", "sit"),
            ("wearing", "wear"),
            ("police", "polic"),
        ];
        for (word, expected) in cases {
            assert_eq!(stem(word), expected, "{word}");
        }
        assert_eq!(stem("[noise]"), "[noise]");
    }

    #[test]
    fn transcript_filtering() {
        let cfg = PreprocessConfig::default();
        assert_eq!(
            filter_transcript(&[tt("hello", 0.9), tt("world", 0.4)], &cfg),
            strings(&["hello"])
        );
        assert_eq!(
            filter_transcript(&[tt("uh", 0.9), tt("uh", 0.9), tt("go", 0.8)], &cfg),
            strings(&["uh", "go"])
        );
        assert_eq!(
            filter_transcript(&[tt("[laughter]", 0.9)], &cfg),
            strings(&["[laughter]"])
        );
        // non-exclamation repeats stay
        assert_eq!(
            filter_transcript(&[tt("no", 0.9), tt("no", 0.9)], &cfg),
            strings(&["no", "no"])
        );
        // a dropped low-confidence word between two exclamations still collapses
        assert_eq!(
            filter_transcript(&[tt("hm", 0.9), tt("x", 0.1), tt("hm", 0.9)], &cfg),
            strings(&["hm"])
        );
    }

    #[test]
    fn caption_processing() {
        let pos = PosLexicon::new(
            [
                ("man", PosTag::Noun),
                ("suit", PosTag::Noun),
                ("a", PosTag::Other),
                ("in", PosTag::Other),
            ]
            .into_iter()
            .map(|(w, t)| (w.to_string(), t))
            .collect(),
        );
        assert_eq!(process_caption("a man in a suit", &pos), strings(&["man", "suit"]));
        assert!(process_caption("", &pos).is_empty());
        assert_eq!(
            process_caption("zyzzyva runs", &pos),
            strings(&["zyzzyva", "run"])
        );
    }

    #[test]
    fn topic_membership() {
        let map = CategoryMap::builtin();
        assert_eq!(
            topics(&strings(&["happy", "smile"]), &map),
            ["joy".to_string()].into()
        );
        assert!(topics(&[], &map).is_empty());
        // stemmed caption tokens still match
        assert!(topics(&strings(&["happi"]), &map).contains("joy"));

        let custom = CategoryMap::from_json(r#"{"animal":["dog"],"clothing":["tie"]}"#).unwrap();
        assert_eq!(
            topics(&strings(&["dog", "tie"]), &custom),
            ["animal".to_string(), "clothing".to_string()].into()
        );
    }

    #[test]
    fn builtin_category_map_has_twelve_topics() {
        assert_eq!(CategoryMap::builtin().topic_names().count(), 12);
    }

    #[test]
    fn category_map_rejects_empty_topic() {
        assert!(CategoryMap::from_json(r#"{"animal":[]}"#).is_err());
    }

    #[test]
    fn prevalence_hand_corpus() {
        let map = CategoryMap::from_json(r#"{"animal":["dog"],"clothing":["tie"],"joy":["smile"]}"#)
            .unwrap();
        let corpus = vec![
            (strings(&["dog", "tie"]), RaidLabel::Raided),
            (strings(&["tie"]), RaidLabel::Raided),
            (strings(&["dog"]), RaidLabel::NonRaided),
            (strings(&["smile"]), RaidLabel::NonRaided),
        ];
        let rows = topic_prevalence(&corpus, &map).unwrap();
        // hand counts: clothing 0/2 vs 2/2, joy 1/2 vs 0/2, animal 1/2 vs 1/2
        let got: Vec<(&str, f64, f64, f64)> = rows
            .iter()
            .map(|r| (r.topic.as_str(), r.non_raided_pct, r.raided_pct, r.difference))
            .collect();
        assert_eq!(
            got,
            vec![
                ("clothing", 0.0, 100.0, 100.0),
                ("joy", 50.0, 0.0, 50.0),
                ("animal", 50.0, 50.0, 0.0),
            ]
        );
    }

    #[test]
    fn prevalence_requires_both_classes() {
        let map = CategoryMap::builtin();
        let corpus = vec![(strings(&["dog"]), RaidLabel::Raided)];
        assert!(topic_prevalence(&corpus, &map).is_err());
    }

    #[test]
    fn word_list_skips_comments() {
        let words = parse_word_list("# header\nFoo\n\n bar \n");
        assert_eq!(words, ["bar".to_string(), "foo".to_string()].into());
    }

    proptest! {
        #[test]
        fn stem_is_idempotent(word in "[a-z]{1,14}") {
            let once = stem(&word);
            prop_assert_eq!(stem(&once), once);
        }

        #[test]
        fn tokens_are_lowercase(text in "\\PC{0,60}") {
            for t in tokenize(&text) {
                if !is_tag(&t) {
                    prop_assert_eq!(t.to_lowercase(), t.clone());
                }
                prop_assert!(!t.is_empty());
            }
        }

        #[test]
        fn transcript_filter_monotone(
            confs in proptest::collection::vec(0.0f64..=1.0, 0..30),
            lo in 0.0f64..=1.0,
            hi in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let words = ["uh", "go", "uh", "stop", "[noise]"];
            let toks: Vec<_> = confs.iter().enumerate()
                .map(|(i, &c)| tt(words[i % words.len()], c)).collect();
            let mut cfg = PreprocessConfig { min_transcript_confidence: lo, ..PreprocessConfig::default() };
            let a = filter_transcript(&toks, &cfg).len();
            cfg.min_transcript_confidence = hi;
            let b = filter_transcript(&toks, &cfg).len();
            prop_assert!(a <= toks.len());
            prop_assert!(b <= a);
        }

        #[test]
        fn topics_monotone(
            base in proptest::collection::vec("[a-z]{2,7}", 0..8),
            extra in proptest::collection::vec("[a-z]{2,7}", 0..8),
        ) {
            let map = CategoryMap::builtin();
            let names: BTreeSet<String> = map.topic_names().map(String::from).collect();
            let a = topics(&base, &map);
            let mut more = base.clone();
            more.extend(extra);
            let b = topics(&more, &map);
            prop_assert!(a.is_subset(&b));
            prop_assert!(b.is_subset(&names));
        }
    }
}
