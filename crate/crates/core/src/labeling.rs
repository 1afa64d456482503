//! Ground-truth labels from hate-comment rate and thread/comment alignment.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Source, VideoRecord};
use crate::error::{Error, Result};
use crate::textprep::{parse_word_list, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaidLabel {
    #[serde(alias = "Raided")]
    Raided,
    #[serde(alias = "NonRaided")]
    NonRaided,
    #[serde(alias = "Unlabeled")]
    Unlabeled,
}

impl RaidLabel {
    /// 1 for raided, 0 for non-raided, `None` for unlabeled.
    pub fn as_binary(self) -> Option<bool> {
        match self {
            RaidLabel::Raided => Some(true),
            RaidLabel::NonRaided => Some(false),
            RaidLabel::Unlabeled => None,
        }
    }
}

/// Lowercase single-word terms that mark a comment as hateful.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HateLexicon {
    terms: BTreeSet<String>,
}

impl HateLexicon {
    pub fn new<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let terms: BTreeSet<String> = terms.into_iter().map(Into::into).collect();
        if terms.is_empty() {
            return Err(Error::Config("hate lexicon is empty".into()));
        }
        for t in &terms {
            if t.is_empty() || t.chars().any(char::is_whitespace) || t.to_lowercase() != *t {
                return Err(Error::Config(format!(
                    "lexicon term `{t}` must be a single lowercase word"
                )));
            }
        }
        Ok(HateLexicon { terms })
    }

    /// One term per line, `#` comments ignored. Terms are lowercased.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(parse_word_list(text))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.terms.contains(token)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelConfig {
    pub hcps_raid_threshold: f64,
    pub lag_raid_threshold_s: i64,
    pub lag_nonraid_threshold_s: i64,
    pub bin_width_s: i64,
    pub max_lag_bins: i64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            hcps_raid_threshold: 1e-4,
            lag_raid_threshold_s: 86_400,
            lag_nonraid_threshold_s: 86_400,
            bin_width_s: 3_600,
            max_lag_bins: 168,
        }
    }
}

impl LabelConfig {
    pub fn check(&self) -> Result<()> {
        let positive = self.hcps_raid_threshold > 0.0
            && self.lag_raid_threshold_s > 0
            && self.lag_nonraid_threshold_s > 0
            && self.bin_width_s > 0
            && self.max_lag_bins > 0;
        if positive {
            Ok(())
        } else {
            Err(Error::Config("label thresholds must be strictly positive".into()))
        }
    }
}

pub fn is_hate_comment(text: &str, lexicon: &HateLexicon) -> bool {
    tokenize(text).iter().any(|t| lexicon.contains(t))
}

/// Hate comments per second over the first-to-last comment span. Spans
/// shorter than one second count as one second.
pub fn hcps(video: &VideoRecord, lexicon: &HateLexicon) -> f64 {
    let hateful = video
        .comments
        .iter()
        .filter(|c| is_hate_comment(&c.text, lexicon))
        .count();
    if hateful == 0 {
        return 0.0;
    }
    let first = video.comments.iter().map(|c| c.timestamp_s).min().unwrap_or(0);
    let last = video.comments.iter().map(|c| c.timestamp_s).max().unwrap_or(0);
    let span = (last - first).max(1);
    hateful as f64 / span as f64
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Offset (seconds) that best aligns the comment series with the thread's
/// post series. Positive means comments trail the thread.
///
/// Both event streams are counted in `bin_width_s` bins anchored at the
/// earliest event of either stream. For each shift `k` the comment series is
/// read `k` bins ahead (zero outside the window) and correlated with the post
/// series. Undefined correlations score 0. Ties go to the smallest `|k|`,
/// then to the negative shift.
pub fn sync_lag(video: &VideoRecord, cfg: &LabelConfig) -> Option<i64> {
    let link = video.thread_link.as_ref()?;
    let comment_times = video.comments.iter().map(|c| c.timestamp_s);
    let all = comment_times.clone().chain(link.post_timestamps_s.iter().copied());
    let start = all.clone().min()?;
    let end = all.max()?;
    let width = cfg.bin_width_s.max(1);
    let n_bins = ((end - start) / width + 1) as usize;

    let mut posts = vec![0.0; n_bins];
    for &t in &link.post_timestamps_s {
        posts[((t - start) / width) as usize] += 1.0;
    }
    let mut comments = vec![0.0; n_bins];
    for t in comment_times {
        comments[((t - start) / width) as usize] += 1.0;
    }

    let mut shifted = vec![0.0; n_bins];
    let mut best: Option<(i64, f64)> = None;
    let max_k = cfg.max_lag_bins.max(0);
    // visit shifts in tie-break order: 0, -1, 1, -2, 2, ...
    let order = std::iter::once(0).chain((1..=max_k).flat_map(|m| [-m, m]));
    for k in order {
        for (i, slot) in shifted.iter_mut().enumerate() {
            let j = i as i64 + k;
            *slot = if (0..n_bins as i64).contains(&j) {
                comments[j as usize]
            } else {
                0.0
            };
        }
        let r = pearson(&posts, &shifted).unwrap_or(0.0);
        let better = match best {
            None => true,
            Some((_, best_r)) => r > best_r + 1e-12,
        };
        if better {
            best = Some((k, r));
        }
    }
    best.map(|(k, _)| k * width)
}

/// Assigns the ground-truth class of a video.
///
/// Random platform videos are non-raided. A fringe-linked video is raided when
/// its hate rate exceeds the threshold and its lag is under the raid bound;
/// non-raided when it has no hate comments and its lag exceeds the non-raid
/// bound; otherwise it stays unlabeled.
pub fn label(video: &VideoRecord, cfg: &LabelConfig, lexicon: &HateLexicon) -> RaidLabel {
    if video.source == Source::PlatformRandom {
        return RaidLabel::NonRaided;
    }
    let rate = hcps(video, lexicon);
    let Some(lag) = sync_lag(video, cfg) else {
        return RaidLabel::Unlabeled;
    };
    classify(rate, lag, cfg)
}

/// The threshold rule of [`label`] applied to precomputed signals.
pub fn classify(rate: f64, lag_s: i64, cfg: &LabelConfig) -> RaidLabel {
    if rate > cfg.hcps_raid_threshold && lag_s.abs() < cfg.lag_raid_threshold_s {
        RaidLabel::Raided
    } else if rate == 0.0 && lag_s > cfg.lag_nonraid_threshold_s {
        RaidLabel::NonRaided
    } else {
        RaidLabel::Unlabeled
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CommentEvent, ThreadLink};
    use proptest::prelude::*;

    fn lex() -> HateLexicon {
        HateLexicon::new(["slur1"]).unwrap()
    }

    fn video(comments: &[(i64, &str)], posts: Option<Vec<i64>>) -> VideoRecord {
        let mut v = VideoRecord::new("v", Source::FringeLinked);
        v.comments = comments
            .iter()
            .map(|&(t, s)| CommentEvent {
                timestamp_s: t,
                text: s.into(),
            })
            .collect();
        v.thread_link = posts.map(|p| ThreadLink {
            thread_id: "t".into(),
            post_timestamps_s: p,
        });
        v.normalize();
        v
    }

    #[test]
    fn hate_comment_predicate() {
        assert!(is_hate_comment("you slur1 !!", &lex()));
        assert!(!is_hate_comment("hello world", &lex()));
        assert!(is_hate_comment("SLUR1", &lex()));
    }

    #[test]
    fn lexicon_validation() {
        assert!(HateLexicon::new(Vec::<String>::new()).is_err());
        assert!(HateLexicon::new(["two words"]).is_err());
        assert!(HateLexicon::new(["Upper"]).is_err());
        let parsed = HateLexicon::parse("# c\nFoo\nbar\n").unwrap();
        assert!(parsed.contains("foo") && parsed.contains("bar"));
    }

    #[test]
    fn hcps_cases() {
        assert_eq!(hcps(&video(&[], None), &lex()), 0.0);

        // 20 hateful of 100 comments, spanning 0..=100000 s
        let comments: Vec<(i64, &str)> = (0..100)
            .map(|i| {
                let t = if i == 99 { 100_000 } else { i * 1000 };
                (t, if i % 5 == 0 { "slur1" } else { "fine" })
            })
            .collect();
        assert!((hcps(&video(&comments, None), &lex()) - 2.0e-4).abs() < 1e-18);

        assert_eq!(hcps(&video(&[(42, "slur1")], None), &lex()), 1.0);
        assert_eq!(hcps(&video(&[(5, "slur1"), (5, "slur1")], None), &lex()), 2.0);
    }

    #[test]
    fn lag_recovers_shift() {
        let posts: Vec<i64> = (0..=3600).step_by(300).collect();
        let comments: Vec<(i64, &str)> = posts.iter().map(|&t| (t + 7200, "x")).collect();
        let v = video(&comments, Some(posts.clone()));
        assert_eq!(sync_lag(&v, &LabelConfig::default()), Some(7200));

        let same: Vec<(i64, &str)> = posts.iter().map(|&t| (t, "x")).collect();
        assert_eq!(sync_lag(&video(&same, Some(posts)), &LabelConfig::default()), Some(0));

        assert_eq!(sync_lag(&video(&same, None), &LabelConfig::default()), None);
    }

    #[test]
    fn lag_negative_when_comments_lead() {
        let posts = vec![50_000, 50_100, 53_700];
        let comments: Vec<(i64, &str)> = posts.iter().map(|&t| (t - 3 * 3600, "x")).collect();
        assert_eq!(
            sync_lag(&video(&comments, Some(posts)), &LabelConfig::default()),
            Some(-3 * 3600)
        );
    }

    #[test]
    fn degenerate_series_lag_zero() {
        // single bin on each side: every correlation undefined
        let v = video(&[(10, "x")], Some(vec![20]));
        assert_eq!(sync_lag(&v, &LabelConfig::default()), Some(0));
    }

    #[test]
    fn classify_fixtures() {
        let cfg = LabelConfig::default();
        assert_eq!(classify(2e-4, 3600, &cfg), RaidLabel::Raided);
        assert_eq!(classify(0.0, 172_800, &cfg), RaidLabel::NonRaided);
        assert_eq!(classify(5e-5, 3600, &cfg), RaidLabel::Unlabeled);
        assert_eq!(classify(2e-4, 172_800, &cfg), RaidLabel::Unlabeled);
    }

    #[test]
    fn random_videos_are_non_raided() {
        let mut v = video(&[(0, "slur1"), (1, "slur1")], None);
        v.source = Source::PlatformRandom;
        assert_eq!(label(&v, &LabelConfig::default(), &lex()), RaidLabel::NonRaided);
    }

    #[test]
    fn fringe_without_thread_is_unlabeled() {
        let v = video(&[(0, "slur1")], None);
        assert_eq!(label(&v, &LabelConfig::default(), &lex()), RaidLabel::Unlabeled);
    }

    proptest! {
        #[test]
        fn translation_invariance(
            comments in proptest::collection::vec((0i64..400_000, proptest::bool::ANY), 0..40),
            posts in proptest::collection::vec(0i64..400_000, 1..20),
            offset in 0i64..1_000_000_000,
        ) {
            let texts: Vec<(i64, &str)> = comments.iter()
                .map(|&(t, h)| (t, if h { "slur1 x" } else { "x" })).collect();
            let a = video(&texts, Some(posts.clone()));
            let shifted: Vec<(i64, &str)> = texts.iter().map(|&(t, s)| (t + offset, s)).collect();
            let b = video(&shifted, Some(posts.iter().map(|p| p + offset).collect()));
            let cfg = LabelConfig { max_lag_bins: 24, ..LabelConfig::default() };
            prop_assert_eq!(hcps(&a, &lex()), hcps(&b, &lex()));
            prop_assert_eq!(sync_lag(&a, &cfg), sync_lag(&b, &cfg));
            let rate = hcps(&a, &lex());
            prop_assert!(rate >= 0.0);
            prop_assert_eq!(rate == 0.0, !texts.iter().any(|(_, s)| s.contains("slur1")));
        }

        #[test]
        fn raid_and_nonraid_exclusive(
            rate in prop_oneof![Just(0.0), 0.0f64..1.0],
            lag in -500_000i64..500_000,
            raid_lag in 1i64..200_000,
            extra in 0i64..200_000,
        ) {
            let cfg = LabelConfig {
                lag_raid_threshold_s: raid_lag,
                lag_nonraid_threshold_s: raid_lag + extra,
                ..LabelConfig::default()
            };
            let l = classify(rate, lag, &cfg);
            let raid_cond = rate > cfg.hcps_raid_threshold && lag.abs() < cfg.lag_raid_threshold_s;
            let non_cond = rate == 0.0 && lag > cfg.lag_nonraid_threshold_s;
            prop_assert!(!(raid_cond && non_cond));
            prop_assert_eq!(l == RaidLabel::Raided, raid_cond);
            prop_assert_eq!(l == RaidLabel::NonRaided, non_cond);
        }
    }
}
