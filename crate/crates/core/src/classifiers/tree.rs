use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::vectorizer::SparseVector;

/// One node of a binary decision tree. Samples with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Weighted Gini decrease produced by this split.
        gain: f64,
    },
    Leaf {
        /// Weighted count of positive training samples reaching the leaf.
        positive: f64,
        total: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn leaf_for(&self, x: &SparseVector) -> (f64, f64) {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x.get(*feature) <= *threshold { *left } else { *right },
                Node::Leaf { positive, total } => return (*positive, *total),
            }
        }
    }

    /// Laplace-smoothed positive frequency of the leaf reached by `x`.
    pub fn predict(&self, x: &SparseVector) -> f64 {
        let (p, n) = self.leaf_for(x);
        (p + 1.0) / (n + 2.0)
    }

    pub(crate) fn add_importances(&self, into: &mut [f64]) {
        let total: f64 = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { gain, .. } => Some(*gain),
                Node::Leaf { .. } => None,
            })
            .sum();
        if total <= 0.0 {
            return;
        }
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                into[*feature] += gain / total;
            }
        }
    }
}

pub(crate) fn gini(total: f64, positive: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = positive / total;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Weighted mean Gini impurity of the two children of a split.
pub(crate) fn split_impurity(left: (f64, f64), right: (f64, f64)) -> f64 {
    let n = left.0 + right.0;
    (left.0 * gini(left.0, left.1) + right.0 * gini(right.0, right.1)) / n
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Number of non-constant candidate features examined per split.
    pub max_features: usize,
    /// Draw one random threshold per candidate instead of searching all of them.
    pub random_thresholds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity: f64,
    left: (f64, f64),
    right: (f64, f64),
}

/// (value, weight, positive weight)
type ValueGroup = (f64, f64, f64);

/// Distinct values of one feature inside a node with their (weight, positive
/// weight), in ascending value order. Zeros are implicit in the sparse input
/// and are merged in here.
fn value_groups(entries: &[(f64, usize)], weights: &[u32], labels: &[bool], node: (f64, f64)) -> Vec<ValueGroup> {
    let mut groups: Vec<ValueGroup> = Vec::new();
    let (mut nz_w, mut nz_p) = (0.0, 0.0);
    for &(v, row) in entries {
        let w = weights[row] as f64;
        let p = if labels[row] { w } else { 0.0 };
        nz_w += w;
        nz_p += p;
        match groups.last_mut() {
            Some(g) if g.0 == v => {
                g.1 += w;
                g.2 += p;
            }
            _ => groups.push((v, w, p)),
        }
    }
    let zero_w = node.0 - nz_w;
    if zero_w > 0.0 {
        let pos = groups.partition_point(|g| g.0 < 0.0);
        groups.insert(pos, (0.0, zero_w, node.1 - nz_p));
    }
    groups
}

/// Lowest-impurity midpoint split over one feature's value groups. Earlier
/// thresholds win ties.
fn best_threshold(feature: usize, groups: &[(f64, f64, f64)], node: (f64, f64)) -> Option<Split> {
    let mut best: Option<Split> = None;
    let (mut lw, mut lp) = (0.0, 0.0);
    for pair in groups.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        lw += a.1;
        lp += a.2;
        let mut threshold = 0.5 * (a.0 + b.0);
        if threshold >= b.0 {
            threshold = a.0;
        }
        let left = (lw, lp);
        let right = (node.0 - lw, node.1 - lp);
        let impurity = split_impurity(left, right);
        if best.is_none_or(|s| impurity < s.impurity) {
            best = Some(Split {
                feature,
                threshold,
                impurity,
                left,
                right,
            });
        }
    }
    best
}

/// A single uniformly drawn threshold in `[min, max)` of the feature's values.
fn random_threshold(
    feature: usize,
    groups: &[(f64, f64, f64)],
    node: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Option<Split> {
    let (lo, hi) = (groups.first()?.0, groups.last()?.0);
    if groups.len() < 2 {
        return None;
    }
    let mut threshold = lo + rng.random::<f64>() * (hi - lo);
    if threshold >= hi {
        threshold = lo;
    }
    let (mut lw, mut lp) = (0.0, 0.0);
    for g in groups.iter().take_while(|g| g.0 <= threshold) {
        lw += g.1;
        lp += g.2;
    }
    let left = (lw, lp);
    let right = (node.0 - lw, node.1 - lp);
    Some(Split {
        feature,
        threshold,
        impurity: split_impurity(left, right),
        left,
        right,
    })
}

/// Grows one tree on the rows with nonzero weight.
pub(crate) fn grow(
    rows: &[SparseVector],
    labels: &[bool],
    weights: &[u32],
    params: GrowParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut nodes: Vec<Node> = vec![Node::Leaf {
        positive: 0.0,
        total: 0.0,
    }];
    let root_rows: Vec<usize> = (0..rows.len()).filter(|&r| weights[r] > 0).collect();
    let mut stack = vec![(0usize, root_rows, 0usize)];
    let mut side = vec![0u8; rows.len()];

    while let Some((slot, members, depth)) = stack.pop() {
        let total: f64 = members.iter().map(|&r| weights[r] as f64).sum();
        let positive: f64 = members
            .iter()
            .filter(|&&r| labels[r])
            .map(|&r| weights[r] as f64)
            .sum();
        let leaf = Node::Leaf { positive, total };
        let stop = params.max_depth.is_some_and(|d| depth >= d)
            || total < params.min_samples_split as f64
            || positive == 0.0
            || positive == total;
        if stop {
            nodes[slot] = leaf;
            continue;
        }

        let split = find_split(rows, labels, weights, &members, (total, positive), params, rng);
        let Some(split) = split else {
            nodes[slot] = leaf;
            continue;
        };

        // 1 = nonzero and left, 2 = nonzero and right, 0 = implicit zero
        for &r in &members {
            let v = rows[r].get(split.feature);
            if v != 0.0 {
                side[r] = if v <= split.threshold { 1 } else { 2 };
            }
        }
        let zero_goes_left = 0.0 <= split.threshold;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&r| match side[r] {
            1 => true,
            2 => false,
            _ => zero_goes_left,
        });
        for &r in &members {
            side[r] = 0;
        }

        let left = nodes.len();
        let right = left + 1;
        nodes.push(leaf.clone());
        nodes.push(leaf);
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            gain: total * gini(total, positive)
                - split.left.0 * gini(split.left.0, split.left.1)
                - split.right.0 * gini(split.right.0, split.right.1),
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    Tree { nodes }
}

pub(crate) fn find_split(
    rows: &[SparseVector],
    labels: &[bool],
    weights: &[u32],
    members: &[usize],
    node: (f64, f64),
    params: GrowParams,
    rng: &mut ChaCha8Rng,
) -> Option<Split> {
    // (feature, value, row) for every stored entry in the node
    let mut triples: Vec<(usize, f64, usize)> = members
        .iter()
        .flat_map(|&r| rows[r].entries().iter().map(move |&(f, v)| (f, v, r)))
        .collect();
    triples.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

    // Features absent from every member row are constant zero and never split.
    let mut candidates: Vec<(usize, Vec<ValueGroup>)> = Vec::new();
    let mut start = 0;
    while start < triples.len() {
        let feature = triples[start].0;
        let end = start + triples[start..].partition_point(|t| t.0 == feature);
        let entries: Vec<(f64, usize)> = triples[start..end].iter().map(|t| (t.1, t.2)).collect();
        let groups = value_groups(&entries, weights, labels, node);
        if groups.len() > 1 {
            candidates.push((feature, groups));
        }
        start = end;
    }

    let chosen: Vec<usize> = if params.max_features >= candidates.len() {
        (0..candidates.len()).collect()
    } else {
        let mut picked = rand::seq::index::sample(rng, candidates.len(), params.max_features).into_vec();
        picked.sort_unstable();
        picked
    };

    let mut best: Option<Split> = None;
    for i in chosen {
        let (feature, groups) = &candidates[i];
        let split = if params.random_thresholds {
            random_threshold(*feature, groups, node, rng)
        } else {
            best_threshold(*feature, groups, node)
        };
        if let Some(s) = split {
            if best.is_none_or(|b| s.impurity < b.impurity) {
                best = Some(s);
            }
        }
    }
    best
}
