//! CART-style classification tree over binary answer indicators.
//!
//! Nodes split on a single answer (`true` branch: the answer was given). The
//! split maximizes the Gini impurity decrease; ties go to the lowest answer
//! position. Pruning is minimal cost-complexity (weakest link) pruning with
//! the node cost `R(t) = n_t / N * gini(t)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::category::{ProbabilityCategory, CATEGORIES};
use crate::case_space::CaseSet;

/// Gains below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;
/// Gains closer than this are treated as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("cannot fit a tree on an empty case set")]
    Empty,
    #[error("{cases} cases but {labels} categories")]
    LabelMismatch { cases: usize, labels: usize },
    #[error("cases have {found} answers but {expected} answer ids were given")]
    FeatureMismatch { expected: usize, found: usize },
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
    #[error("pruning parameter must be a non-negative number, got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

pub type Counts = [usize; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub counts: Counts,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// Flat answer position tested by the node.
    pub feature: usize,
    pub answer_id: String,
    pub when_true: Box<TreeNode>,
    pub when_false: Box<TreeNode>,
}

impl TreeNode {
    fn leaf(counts: Counts) -> Self {
        Self {
            counts,
            split: None,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    /// Most frequent category; ties resolve to the lower category.
    pub fn majority(&self) -> ProbabilityCategory {
        let mut best = 0;
        for k in 1..3 {
            if self.counts[k] > self.counts[best] {
                best = k;
            }
        }
        CATEGORIES[best]
    }

    pub fn node_count(&self) -> usize {
        1 + self.split.as_ref().map_or(0, |s| {
            s.when_true.node_count() + s.when_false.node_count()
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.split.as_ref().map_or(1, |s| {
            s.when_true.leaf_count() + s.when_false.leaf_count()
        })
    }

    pub fn depth(&self) -> usize {
        self.split.as_ref().map_or(0, |s| {
            1 + s.when_true.depth().max(s.when_false.depth())
        })
    }

    /// Visits nodes in pre-order (node, true branch, false branch).
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a TreeNode)) {
        visit(self);
        if let Some(s) = &self.split {
            s.when_true.walk(visit);
            s.when_false.walk(visit);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub feature_ids: Vec<String>,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn total(&self) -> usize {
        self.root.total()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Category predicted for an answer assignment.
    pub fn predict(&self, answers: &[bool]) -> ProbabilityCategory {
        let mut node = &self.root;
        while let Some(s) = &node.split {
            node = if answers[s.feature] {
                &s.when_true
            } else {
                &s.when_false
            };
        }
        node.majority()
    }
}

pub fn gini(counts: &Counts) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    rows: Vec<&'a [bool]>,
    labels: Vec<usize>,
    feature_ids: &'a [String],
    params: TreeParams,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Counts {
        let mut c = [0; 3];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn partition_counts(&self, idx: &[usize], feature: usize) -> (Counts, Counts) {
        let mut t = [0; 3];
        let mut f = [0; 3];
        for &i in idx {
            if self.rows[i][feature] {
                t[self.labels[i]] += 1;
            } else {
                f[self.labels[i]] += 1;
            }
        }
        (t, f)
    }

    fn gains(&self, idx: &[usize]) -> Vec<Option<f64>> {
        let n = idx.len() as f64;
        let parent = gini(&self.counts(idx));
        (0..self.feature_ids.len())
            .map(|feature| {
                let (t, f) = self.partition_counts(idx, feature);
                let (nt, nf) = (t.iter().sum::<usize>(), f.iter().sum::<usize>());
                if nt < self.params.min_samples_leaf.max(1)
                    || nf < self.params.min_samples_leaf.max(1)
                {
                    return None;
                }
                Some(parent - (nt as f64 / n) * gini(&t) - (nf as f64 / n) * gini(&f))
            })
            .collect()
    }

    fn build(&self, idx: Vec<usize>, depth: usize) -> TreeNode {
        let counts = self.counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || idx.len() < self.params.min_samples_split {
            return TreeNode::leaf(counts);
        }
        let mut best: Option<(usize, f64)> = None;
        for (feature, gain) in self.gains(&idx).into_iter().enumerate() {
            let Some(gain) = gain else { continue };
            if gain > MIN_GAIN && best.is_none_or(|(_, g)| gain > g + TIE_TOLERANCE) {
                best = Some((feature, gain));
            }
        }
        let Some((feature, _)) = best else {
            return TreeNode::leaf(counts);
        };
        let (yes, no): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.rows[i][feature]);
        TreeNode {
            counts,
            split: Some(Split {
                feature,
                answer_id: self.feature_ids[feature].clone(),
                when_true: Box::new(self.build(yes, depth + 1)),
                when_false: Box::new(self.build(no, depth + 1)),
            }),
        }
    }
}

fn builder<'a>(
    cases: &'a CaseSet,
    answer_ids: &'a [String],
    categories: &[ProbabilityCategory],
    params: TreeParams,
) -> Result<Builder<'a>, TreeError> {
    if cases.is_empty() {
        return Err(TreeError::Empty);
    }
    if cases.len() != categories.len() {
        return Err(TreeError::LabelMismatch {
            cases: cases.len(),
            labels: categories.len(),
        });
    }
    if params.min_samples_leaf == 0 {
        return Err(TreeError::InvalidParams("min_samples_leaf must be >= 1".into()));
    }
    let rows: Vec<&[bool]> = cases.iter().map(|c| c.answers()).collect();
    if let Some(bad) = rows.iter().find(|r| r.len() != answer_ids.len()) {
        return Err(TreeError::FeatureMismatch {
            expected: answer_ids.len(),
            found: bad.len(),
        });
    }
    Ok(Builder {
        rows,
        labels: categories.iter().map(|c| c.index()).collect(),
        feature_ids: answer_ids,
        params,
    })
}

/// Grows a Gini tree predicting `categories[i]` from the answers of case `i`.
pub fn fit_decision_tree(
    cases: &CaseSet,
    answer_ids: &[String],
    categories: &[ProbabilityCategory],
    params: &TreeParams,
) -> Result<DecisionTree, TreeError> {
    let b = builder(cases, answer_ids, categories, *params)?;
    let root = b.build((0..cases.len()).collect(), 0);
    Ok(DecisionTree {
        feature_ids: answer_ids.to_vec(),
        root,
    })
}

/// Gini decrease of splitting the whole case set on each answer; `None` where
/// the answer is constant over the set.
pub fn split_gains(
    cases: &CaseSet,
    answer_ids: &[String],
    categories: &[ProbabilityCategory],
) -> Result<Vec<Option<f64>>, TreeError> {
    let b = builder(cases, answer_ids, categories, TreeParams::default())?;
    Ok(b.gains(&(0..cases.len()).collect::<Vec<_>>()))
}

/// `(cost of the node as a leaf, cost of its subtree, leaves of its subtree)`.
fn subtree_cost(node: &TreeNode, total: f64) -> (f64, f64, usize) {
    let own = node.total() as f64 / total * gini(&node.counts);
    match &node.split {
        None => (own, own, 1),
        Some(s) => {
            let (_, ct, lt) = subtree_cost(&s.when_true, total);
            let (_, cf, lf) = subtree_cost(&s.when_false, total);
            (own, ct + cf, lt + lf)
        }
    }
}

/// Smallest weakest-link value `g(t) = (R(t) - R(T_t)) / (|T_t| - 1)` over
/// the internal nodes.
fn weakest_link(node: &TreeNode, total: f64) -> Option<f64> {
    let s = node.split.as_ref()?;
    let (own, sub, leaves) = subtree_cost(node, total);
    let g = (own - sub) / (leaves - 1) as f64;
    [
        Some(g),
        weakest_link(&s.when_true, total),
        weakest_link(&s.when_false, total),
    ]
    .into_iter()
    .flatten()
    .reduce(f64::min)
}

/// Collapses every internal node whose weakest-link value is `<= limit`,
/// top-down.
fn collapse(node: &mut TreeNode, total: f64, limit: f64) {
    if node.split.is_none() {
        return;
    }
    let (own, sub, leaves) = subtree_cost(node, total);
    if (own - sub) / (leaves - 1) as f64 <= limit {
        node.split = None;
        return;
    }
    let s = node.split.as_mut().unwrap();
    collapse(&mut s.when_true, total, limit);
    collapse(&mut s.when_false, total, limit);
}

/// Minimal cost-complexity pruning: repeatedly collapses the weakest links
/// while their value does not exceed `alpha`.
pub fn prune_tree(tree: &DecisionTree, alpha: f64) -> Result<DecisionTree, TreeError> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(TreeError::InvalidAlpha(alpha));
    }
    let mut pruned = tree.clone();
    let total = tree.total() as f64;
    while let Some(g) = weakest_link(&pruned.root, total) {
        if g > alpha {
            break;
        }
        collapse(&mut pruned.root, total, g);
    }
    Ok(pruned)
}
