//! CART binary decision trees.
//!
//! One generic grower serves three callers: the plain classifier (gini or
//! entropy over class counts), sample-weighted classification for AdaBoost,
//! and squared-error regression trees for gradient boosting. Candidate
//! thresholds are midpoints between consecutive distinct feature values and a
//! sample goes left iff `x[feature] <= threshold`.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    All,
    Sqrt,
}

impl MaxFeatures {
    pub fn count(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub criterion: Criterion,
    /// `None` grows until the other stopping rules fire.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            seed: 0,
        }
    }
}

impl TreeConfig {
    /// Tuned decision-tree settings: entropy, depth 30, leaf 5, split 10, sqrt features.
    pub fn tuned() -> Self {
        Self {
            criterion: Criterion::Entropy,
            max_depth: Some(30),
            min_samples_split: 10,
            min_samples_leaf: 5,
            max_features: MaxFeatures::Sqrt,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameter("min_samples_leaf must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be >= 2".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidParameter("max_depth must be positive".into()));
        }
        Ok(())
    }
}

/// Impurity of a two-class node from (possibly weighted) class counts.
///
/// Gini is `1 - sum p^2`; entropy is `-sum p log2 p` with `0 log 0 = 0`.
pub fn impurity(counts: [f64; 2], criterion: Criterion) -> Result<f64> {
    let total = counts[0] + counts[1];
    if total.is_nan() || total <= 0.0 {
        return Err(Error::EmptyNode);
    }
    Ok(impurity_unchecked(counts, total, criterion))
}

#[inline]
fn impurity_unchecked(counts: [f64; 2], total: f64, criterion: Criterion) -> f64 {
    let p0 = counts[0] / total;
    let p1 = counts[1] / total;
    match criterion {
        Criterion::Gini => 1.0 - (p0 * p0 + p1 * p1),
        Criterion::Entropy => {
            let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
            h(p0) + h(p1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

/// A binary tree with leaf payload `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode<L> {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode<L>>,
        right: Box<TreeNode<L>>,
    },
    Leaf {
        value: L,
    },
}

impl<L> TreeNode<L> {
    pub fn leaf(&self, row: &[f64]) -> &L {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Edges on the longest root-to-leaf path (a lone leaf has depth 0).
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn leaves(&self) -> Vec<&L> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf { value } => out.push(value),
                TreeNode::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    pub(crate) fn map<M>(self, f: &impl Fn(L) -> M) -> TreeNode<M> {
        match self {
            TreeNode::Leaf { value } => TreeNode::Leaf { value: f(value) },
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::Split {
                feature,
                threshold,
                left: Box::new(left.map(f)),
                right: Box::new(right.map(f)),
            },
        }
    }
}

/// Class tallies of the training samples that reached a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassLeaf {
    /// Summed sample weight per class (plain counts when unweighted).
    pub counts: [f64; 2],
    pub samples: usize,
}

impl ClassLeaf {
    pub fn proba(&self) -> [f64; 2] {
        let total = self.counts[0] + self.counts[1];
        if total > 0.0 {
            [self.counts[0] / total, self.counts[1] / total]
        } else {
            [0.5, 0.5]
        }
    }
}

/// Sufficient statistics the grower needs from a node.
pub(crate) trait Objective: Sync {
    type Stats: Copy + Send + Sync;

    fn empty(&self) -> Self::Stats;
    fn add(&self, stats: &mut Self::Stats, sample: usize);
    fn difference(&self, whole: &Self::Stats, part: &Self::Stats) -> Self::Stats;
    fn weight(&self, stats: &Self::Stats) -> f64;
    /// Per-unit-weight impurity of a node.
    fn impurity(&self, stats: &Self::Stats) -> f64;
    fn is_pure(&self, stats: &Self::Stats) -> bool;
}

pub(crate) struct Classification<'a> {
    pub labels: &'a [u8],
    pub weights: Option<&'a [f64]>,
    pub criterion: Criterion,
}

impl Objective for Classification<'_> {
    type Stats = ClassLeaf;

    fn empty(&self) -> ClassLeaf {
        ClassLeaf {
            counts: [0.0; 2],
            samples: 0,
        }
    }

    #[inline]
    fn add(&self, stats: &mut ClassLeaf, sample: usize) {
        let w = self.weights.map_or(1.0, |w| w[sample]);
        stats.counts[self.labels[sample] as usize] += w;
        stats.samples += 1;
    }

    fn difference(&self, whole: &ClassLeaf, part: &ClassLeaf) -> ClassLeaf {
        ClassLeaf {
            counts: [
                (whole.counts[0] - part.counts[0]).max(0.0),
                (whole.counts[1] - part.counts[1]).max(0.0),
            ],
            samples: whole.samples - part.samples,
        }
    }

    fn weight(&self, stats: &ClassLeaf) -> f64 {
        stats.counts[0] + stats.counts[1]
    }

    #[inline]
    fn impurity(&self, stats: &ClassLeaf) -> f64 {
        let total = self.weight(stats);
        if total > 0.0 {
            impurity_unchecked(stats.counts, total, self.criterion)
        } else {
            0.0
        }
    }

    fn is_pure(&self, stats: &ClassLeaf) -> bool {
        stats.counts[0] <= 0.0 || stats.counts[1] <= 0.0
    }
}

/// Growth limits shared by every tree flavour.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl From<&TreeConfig> for GrowParams {
    fn from(c: &TreeConfig) -> Self {
        Self {
            max_depth: c.max_depth,
            min_samples_split: c.min_samples_split,
            min_samples_leaf: c.min_samples_leaf,
            max_features: c.max_features,
            seed: c.seed,
        }
    }
}

// Below this many node samples the per-feature search runs inline.
const PARALLEL_SPLIT_MIN: usize = 4096;

fn better(gain: f64, best: Option<&Split>) -> bool {
    match best {
        None => true,
        Some(b) => gain > b.impurity_decrease + 1e-12 * b.impurity_decrease.abs().max(1.0),
    }
}

fn best_split_on_feature<O: Objective>(
    table: &DataTable,
    objective: &O,
    samples: &[usize],
    parent: &O::Stats,
    feature: usize,
    min_samples_leaf: usize,
) -> Option<Split> {
    let mut sorted: Vec<(f64, usize)> = samples.iter().map(|&s| (table.value(s, feature), s)).collect();
    sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let parent_weight = objective.weight(parent);
    if parent_weight.is_nan() || parent_weight <= 0.0 {
        return None;
    }
    let parent_impurity = objective.impurity(parent);
    let n = sorted.len();
    let mut left = objective.empty();
    let mut best: Option<Split> = None;
    for i in 0..n.saturating_sub(1) {
        objective.add(&mut left, sorted[i].1);
        let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
        if lo >= hi {
            continue;
        }
        let n_left = i + 1;
        if n_left < min_samples_leaf {
            continue;
        }
        if n - n_left < min_samples_leaf {
            break;
        }
        let right = objective.difference(parent, &left);
        let wl = objective.weight(&left);
        let wr = objective.weight(&right);
        let gain = parent_impurity
            - (wl / parent_weight) * objective.impurity(&left)
            - (wr / parent_weight) * objective.impurity(&right);
        if better(gain, best.as_ref()) {
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid < hi { mid } else { lo };
            best = Some(Split {
                feature,
                threshold,
                impurity_decrease: gain,
            });
        }
    }
    best
}

pub(crate) fn search_split<O: Objective>(
    table: &DataTable,
    objective: &O,
    samples: &[usize],
    parent: &O::Stats,
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let per_feature: Vec<Option<Split>> = if samples.len() >= PARALLEL_SPLIT_MIN && features.len() > 1 {
        features
            .par_iter()
            .map(|&f| best_split_on_feature(table, objective, samples, parent, f, min_samples_leaf))
            .collect()
    } else {
        features
            .iter()
            .map(|&f| best_split_on_feature(table, objective, samples, parent, f, min_samples_leaf))
            .collect()
    };
    // reduce in feature order so ties go to the lowest feature index
    let mut best: Option<Split> = None;
    for split in per_feature.into_iter().flatten() {
        if better(split.impurity_decrease, best.as_ref()) {
            best = Some(split);
        }
    }
    best
}

/// Best (feature, threshold) for a classification node over the given rows.
///
/// Features are scanned in ascending index order, thresholds ascending; a
/// later candidate must strictly beat the incumbent, so ties keep the lowest
/// feature and then the lowest threshold. `None` when no candidate leaves at
/// least `min_samples_leaf` rows on each side.
pub fn best_split(
    table: &DataTable,
    rows: &[usize],
    candidate_features: &[usize],
    criterion: Criterion,
    min_samples_leaf: usize,
) -> Option<Split> {
    let objective = Classification {
        labels: table.labels(),
        weights: None,
        criterion,
    };
    let mut parent = objective.empty();
    for &r in rows {
        objective.add(&mut parent, r);
    }
    if objective.is_pure(&parent) {
        return None;
    }
    let mut features = candidate_features.to_vec();
    features.sort_unstable();
    features.dedup();
    search_split(table, &objective, rows, &parent, &features, min_samples_leaf.max(1))
}

/// Grows a tree over `samples` (indices into `table`, duplicates allowed).
pub(crate) fn grow<O: Objective>(
    table: &DataTable,
    objective: &O,
    samples: Vec<usize>,
    params: &GrowParams,
) -> TreeNode<O::Stats> {
    let mut rng = seeded(params.seed);
    let all_features: Vec<usize> = (0..table.n_features()).collect();
    grow_node(table, objective, samples, params, &all_features, 0, &mut rng)
}

fn grow_node<O: Objective, R: Rng>(
    table: &DataTable,
    objective: &O,
    samples: Vec<usize>,
    params: &GrowParams,
    all_features: &[usize],
    depth: usize,
    rng: &mut R,
) -> TreeNode<O::Stats> {
    let mut stats = objective.empty();
    for &s in &samples {
        objective.add(&mut stats, s);
    }
    let at_max_depth = params.max_depth.is_some_and(|d| depth >= d);
    if at_max_depth || samples.len() < params.min_samples_split || objective.is_pure(&stats) {
        return TreeNode::Leaf { value: stats };
    }
    let n_features = all_features.len();
    let k = params.max_features.count(n_features);
    let sampled;
    let features: &[usize] = if k >= n_features {
        all_features
    } else {
        let mut f = index::sample(rng, n_features, k).into_vec();
        f.sort_unstable();
        sampled = f;
        &sampled
    };
    let Some(split) = search_split(table, objective, &samples, &stats, features, params.min_samples_leaf) else {
        return TreeNode::Leaf { value: stats };
    };
    let (left, right): (Vec<usize>, Vec<usize>) = samples
        .into_iter()
        .partition(|&s| table.value(s, split.feature) <= split.threshold);
    let left = grow_node(table, objective, left, params, all_features, depth + 1, rng);
    let right = grow_node(table, objective, right, params, all_features, depth + 1, rng);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// A fitted classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    pub root: TreeNode<ClassLeaf>,
    pub config: TreeConfig,
    pub n_features: usize,
}

pub fn fit_tree(table: &DataTable, config: &TreeConfig) -> Result<DecisionTreeModel> {
    fit_tree_on(table, (0..table.n_rows()).collect(), None, config)
}

/// Fits on a row multiset, optionally with per-row weights indexed by table row.
pub(crate) fn fit_tree_on(
    table: &DataTable,
    samples: Vec<usize>,
    weights: Option<&[f64]>,
    config: &TreeConfig,
) -> Result<DecisionTreeModel> {
    config.validate()?;
    if table.is_empty() || samples.is_empty() {
        return Err(Error::EmptyTable);
    }
    let objective = Classification {
        labels: table.labels(),
        weights,
        criterion: config.criterion,
    };
    let root = grow(table, &objective, samples, &GrowParams::from(config));
    Ok(DecisionTreeModel {
        root,
        config: *config,
        n_features: table.n_features(),
    })
}

impl DecisionTreeModel {
    fn check(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: row.len(),
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<[f64; 2]> {
        self.check(row)?;
        Ok(self.root.leaf(row).proba())
    }

    /// Argmax of the leaf distribution; a 50/50 leaf predicts class 0.
    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        let p = self.predict_proba(row)?;
        Ok(u8::from(p[1] > p[0]))
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

pub fn predict_tree(model: &DecisionTreeModel, row: &[f64]) -> Result<u8> {
    model.predict(row)
}

pub fn predict_proba_tree(model: &DecisionTreeModel, row: &[f64]) -> Result<[f64; 2]> {
    model.predict_proba(row)
}
