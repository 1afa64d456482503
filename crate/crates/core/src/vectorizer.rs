//! Vocabularies, TF-IDF vectors and sparse feature matrices.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::RaidLabel;

/// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
pub fn idf(df: usize, n_docs: usize) -> Result<f64> {
    if df < 1 || df > n_docs {
        return Err(Error::Domain(format!(
            "document frequency {df} outside [1, {n_docs}]"
        )));
    }
    Ok(((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    idf: Vec<f64>,
    n_docs: usize,
    min_df: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    n_docs: usize,
    min_df: usize,
    /// term -> [column index, document frequency]
    terms: BTreeMap<String, (usize, usize)>,
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            n_docs: v.n_docs,
            min_df: v.min_df,
            terms: v
                .terms
                .into_iter()
                .zip(v.doc_freq)
                .enumerate()
                .map(|(i, (t, df))| (t, (i, df)))
                .collect(),
        }
    }
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = Error;

    fn try_from(f: VocabularyFile) -> Result<Self> {
        let n = f.terms.len();
        let mut slots: Vec<Option<(String, usize)>> = vec![None; n];
        for (term, (idx, df)) in f.terms {
            if idx >= n || slots[idx].is_some() {
                return Err(Error::Config(format!("vocabulary index {idx} invalid or repeated")));
            }
            slots[idx] = Some((term, df));
        }
        let (terms, doc_freq): (Vec<_>, Vec<_>) = slots.into_iter().map(Option::unwrap).unzip();
        Vocabulary::from_parts(terms, doc_freq, f.n_docs, f.min_df)
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>, n_docs: usize, min_df: usize) -> Result<Self> {
        let idf = doc_freq
            .iter()
            .map(|&df| idf(df, n_docs))
            .collect::<Result<Vec<_>>>()?;
        let index = terms.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        Ok(Vocabulary {
            terms,
            index,
            doc_freq,
            idf,
            n_docs,
            min_df,
        })
    }

    /// Counts document frequencies over the training documents and keeps terms
    /// seen in at least `min_df` of them. Columns follow lexicographic term order.
    pub fn fit<D, T>(docs: &[D], min_df: usize) -> Result<Self>
    where
        D: AsRef<[T]>,
        T: AsRef<str>,
    {
        if docs.is_empty() {
            return Err(Error::Empty("cannot fit a vocabulary on zero documents".into()));
        }
        let min_df = min_df.max(1);
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let unique: BTreeSet<&str> = doc.as_ref().iter().map(AsRef::as_ref).collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        let (terms, doc_freq) = df
            .into_iter()
            .filter(|&(_, c)| c >= min_df)
            .map(|(t, c)| (t.to_string(), c))
            .unzip();
        Self::from_parts(terms, doc_freq, docs.len(), min_df)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.doc_freq[i])
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Raw term counts times idf; out-of-vocabulary tokens are dropped.
    pub fn transform<T: AsRef<str>>(&self, doc: &[T], l2_normalize: bool) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in doc {
            if let Some(i) = self.index_of(t.as_ref()) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let entries = counts
            .into_iter()
            .map(|(i, c)| (i, c * self.idf[i]))
            .collect();
        let mut v = SparseVector {
            dims: self.len(),
            entries,
        };
        if l2_normalize {
            v.normalize();
        }
        v
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("vocabulary serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// A sparse row with strictly increasing column indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dims: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(dims: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.retain(|&(_, v)| v != 0.0);
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Domain("sparse indices must be strictly increasing".into()));
            }
        }
        if let Some(&(i, _)) = entries.iter().find(|&&(i, v)| i >= dims || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "entry at column {i} out of range or not finite (dims {dims})"
            )));
        }
        Ok(SparseVector { dims, entries })
    }

    pub fn zeros(dims: usize) -> Self {
        SparseVector {
            dims,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            dims: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for (_, v) in &mut self.entries {
                *v /= n;
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dims];
        for &(i, v) in &self.entries {
            d[i] = v;
        }
        d
    }

    /// Appends `other` after this vector's columns.
    pub fn concat(mut self, other: &SparseVector) -> SparseVector {
        let offset = self.dims;
        self.entries
            .extend(other.entries.iter().map(|&(i, v)| (i + offset, v)));
        self.dims += other.dims;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dims: usize,
    rows: Vec<SparseVector>,
    row_ids: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TripletHeader {
    format: String,
    version: u32,
    rows: usize,
    cols: usize,
    nnz: usize,
    row_ids: Vec<String>,
}

const TRIPLET_FORMAT: &str = "raidradar-sparse-triplets";

impl FeatureMatrix {
    pub fn new(dims: usize, rows: Vec<SparseVector>, row_ids: Vec<String>) -> Result<Self> {
        if rows.len() != row_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: row_ids.len(),
            });
        }
        if let Some(r) = rows.iter().find(|r| r.dims != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: r.dims,
            });
        }
        Ok(FeatureMatrix { dims, rows, row_ids })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &SparseVector {
        &self.rows[i]
    }

    /// Rows at the given positions, in that order.
    pub fn select(&self, positions: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            dims: self.dims,
            rows: positions.iter().map(|&p| self.rows[p].clone()).collect(),
            row_ids: positions.iter().map(|&p| self.row_ids[p].clone()).collect(),
        }
    }

    /// A JSON header line followed by one `row col value` line per stored entry.
    pub fn to_triplets(&self) -> String {
        let header = TripletHeader {
            format: TRIPLET_FORMAT.into(),
            version: 1,
            rows: self.rows.len(),
            cols: self.dims,
            nnz: self.rows.iter().map(|r| r.entries.len()).sum(),
            row_ids: self.row_ids.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in &row.entries {
                writeln!(out, "{r} {c} {v:?}").unwrap();
            }
        }
        out
    }

    pub fn from_triplets(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, message: "missing header".into() })?;
        let header: TripletHeader = serde_json::from_str(first).map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.format != TRIPLET_FORMAT || header.version != 1 {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported format {} v{}", header.format, header.version),
            });
        }
        let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); header.rows];
        let mut nnz = 0;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Parse { line: i + 1, message: m.to_string() };
            let mut parts = line.split_whitespace();
            let mut next = || parts.next().ok_or_else(|| bad("expected `row col value`"));
            let r: usize = next()?.parse().map_err(|_| bad("bad row index"))?;
            let c: usize = next()?.parse().map_err(|_| bad("bad column index"))?;
            let v: f64 = next()?.parse().map_err(|_| bad("bad value"))?;
            if r >= header.rows {
                return Err(bad("row index out of range"));
            }
            entries[r].push((c, v));
            nnz += 1;
        }
        if nnz != header.nnz {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {} entries, found {nnz}", header.nnz),
            });
        }
        let rows = entries
            .into_iter()
            .map(|e| SparseVector::new(header.cols, e))
            .collect::<Result<Vec<_>>>()?;
        FeatureMatrix::new(header.cols, rows, header.row_ids)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_triplets()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_triplets(&text)
    }
}

/// Metadata of one video after text preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataDocument {
    pub tokens: Vec<String>,
    pub category: String,
    pub duration_s: f64,
}

pub const DEFAULT_DURATION_EDGES: [f64; 4] = [60.0, 300.0, 900.0, 3600.0];

/// Index of the half-open bucket `[edge[i-1], edge[i])` holding `value`; the
/// last bucket is unbounded above.
pub fn duration_bucket(value: f64, edges: &[f64]) -> usize {
    edges.iter().take_while(|&&e| value >= e).count()
}

/// TF-IDF block, then one-hot category, then one-hot duration bucket.
pub fn assemble_metadata(
    doc: &MetadataDocument,
    vocab: &Vocabulary,
    categories: &[String],
    duration_bucket_edges: &[f64],
    l2_normalize: bool,
) -> SparseVector {
    let text = vocab.transform(&doc.tokens, l2_normalize);
    let mut category = SparseVector::zeros(categories.len());
    if let Some(pos) = categories.iter().position(|c| *c == doc.category) {
        category.entries.push((pos, 1.0));
    }
    let mut duration = SparseVector::zeros(duration_bucket_edges.len() + 1);
    duration
        .entries
        .push((duration_bucket(doc.duration_s, duration_bucket_edges), 1.0));
    text.concat(&category).concat(&duration)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRanking {
    pub raided: Vec<(String, f64)>,
    pub non_raided: Vec<(String, f64)>,
}

/// Terms with the highest mean TF-IDF weight within each class. Only the first
/// `vocab.len()` columns are considered; unlabeled rows are ignored.
pub fn top_terms_per_class(
    matrix: &FeatureMatrix,
    labels: &[RaidLabel],
    vocab: &Vocabulary,
    k: usize,
    exclude: &BTreeSet<String>,
) -> Result<TermRanking> {
    if labels.len() != matrix.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: matrix.n_rows(),
            got: labels.len(),
        });
    }
    let cols = vocab.len().min(matrix.dims());
    let mut sums = [vec![0.0; cols], vec![0.0; cols]];
    let mut counts = [0usize; 2];
    for (row, label) in matrix.rows().iter().zip(labels) {
        let class = match label {
            RaidLabel::Raided => 0,
            RaidLabel::NonRaided => 1,
            RaidLabel::Unlabeled => continue,
        };
        counts[class] += 1;
        for &(c, v) in row.entries() {
            if c < cols {
                sums[class][c] += v;
            }
        }
    }
    if counts.contains(&0) {
        return Err(Error::Empty("term ranking needs both classes".into()));
    }
    let rank = |class: usize| {
        let mut scored: Vec<(String, f64)> = sums[class]
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0.0)
            .map(|(c, &s)| (vocab.terms[c].clone(), s / counts[class] as f64))
            .filter(|(t, _)| !exclude.contains(t))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    };
    Ok(TermRanking {
        raided: rank(0),
        non_raided: rank(1),
    })
}
