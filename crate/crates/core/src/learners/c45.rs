//! C4.5: gain-ratio splits and error-based (pessimistic) pruning.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::data::{nominal_split, numeric_split, AttrInfo, Instances, Split};
use super::tree::{leaf_errors, DecisionTree, Node};
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct C45Params {
    /// Confidence factor for the pessimistic error estimate.
    pub confidence: f64,
    pub min_leaf: usize,
    pub prune: bool,
}

impl Default for C45Params {
    fn default() -> Self {
        C45Params { confidence: 0.25, min_leaf: 2, prune: true }
    }
}

impl C45Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence <= 0.5) {
            return Err(Error::InvalidParams("confidence must lie in (0, 0.5]".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidParams("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

/// Upper confidence bound on the number of errors beyond the observed
/// `e` among `n` instances.
pub(crate) fn added_errors(n: f64, e: f64, cf: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if e < 1.0 {
        let base = n * (1.0 - libm::pow(cf, 1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (added_errors(n, 1.0, cf) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = math::normal_quantile(1.0 - cf);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * math::sqrt(f / n - f * f / n + z * z / (4.0 * n * n))) / (1.0 + z * z / n);
    r * n - e
}

pub(crate) fn estimated_leaf_errors(counts: &[f64], cf: f64) -> f64 {
    let n: f64 = counts.iter().sum();
    let e = leaf_errors(counts);
    e + added_errors(n, e, cf)
}

pub(crate) fn estimated_errors(node: &Node, cf: f64) -> f64 {
    match node {
        Node::Leaf { counts } => estimated_leaf_errors(counts, cf),
        Node::Split { children, .. } => children.iter().map(|c| estimated_errors(c, cf)).sum(),
    }
}

/// Split selection: among splits whose information gain is at least the
/// average, the one with the highest gain ratio. Ties keep the earlier
/// attribute.
pub(crate) fn select_split(data: &Instances, idx: &[usize], min_leaf: usize) -> Option<Split> {
    let n = idx.len() as f64;
    let mut min_side = 0.1 * n / data.n_classes as f64;
    if min_side <= min_leaf as f64 {
        min_side = min_leaf as f64;
    } else if min_side > 25.0 {
        min_side = 25.0;
    }
    let min_side = math::ceil(min_side) as usize;
    let mut valid: Vec<Split> = Vec::new();
    for (a, info) in data.info.iter().enumerate() {
        let split = match info {
            AttrInfo::Nominal(_) => nominal_split(data, idx, a, min_leaf),
            AttrInfo::Numeric => numeric_split(data, idx, a, min_side, true),
        };
        if let Some(s) = split {
            valid.push(s);
        }
    }
    if valid.is_empty() {
        return None;
    }
    let average = valid.iter().map(|s| s.gain).sum::<f64>() / valid.len() as f64;
    let mut best: Option<Split> = None;
    for s in valid {
        if s.gain >= average - 1e-3 && s.ratio > 1e-6 && best.as_ref().is_none_or(|b| s.ratio > b.ratio + 1e-12) {
            best = Some(s);
        }
    }
    best
}

fn grow(data: &Instances, idx: &[usize], params: &C45Params) -> Node {
    let counts = data.counts(idx);
    let n = idx.len();
    let pure = counts.iter().any(|&c| c as usize == n);
    if n == 0 || pure || n < 2 * params.min_leaf {
        return Node::leaf(counts);
    }
    let Some(split) = select_split(data, idx, params.min_leaf) else {
        return Node::leaf(counts);
    };
    let children = split
        .branches
        .iter()
        .map(|b| if b.is_empty() { Node::leaf(vec![0.0; data.n_classes]) } else { grow(data, b, params) })
        .collect();
    Node::Split { test: split.test, counts, children }
}

/// Collapses subtrees that do not reduce training error, then replaces
/// subtrees by leaves when the leaf's pessimistic error is no worse.
pub(crate) fn prune(node: Node, cf: f64) -> Node {
    match node {
        Node::Leaf { .. } => node,
        Node::Split { test, counts, children } => {
            let as_leaf = leaf_errors(&counts);
            let subtree: f64 = children.iter().map(Node::training_errors).sum();
            if subtree >= as_leaf - 1e-3 {
                return Node::leaf(counts);
            }
            let children: Vec<Node> = children.into_iter().map(|c| prune(c, cf)).collect();
            let tree_est: f64 = children.iter().map(|c| estimated_errors(c, cf)).sum();
            if estimated_leaf_errors(&counts, cf) <= tree_est + 0.1 {
                Node::leaf(counts)
            } else {
                Node::Split { test, counts, children }
            }
        }
    }
}

pub(crate) fn train(data: &Instances, params: &C45Params) -> DecisionTree {
    let idx: Vec<usize> = (0..data.len()).collect();
    let root = grow(data, &idx, params);
    let root = if params.prune { prune(root, params.confidence) } else { root };
    DecisionTree { root }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn added_errors_reference_points() {
        // Zero observed errors: n * (1 - cf^(1/n)).
        let n = 6.0;
        assert!((added_errors(n, 0.0, 0.25) - n * (1.0 - libm::pow(0.25, 1.0 / n))).abs() < 1e-12);
        // Saturated case.
        assert_eq!(added_errors(2.0, 2.0, 0.25), 0.0);
        // Monotone in the number of observed errors.
        assert!(added_errors(20.0, 3.0, 0.25) + 3.0 > added_errors(20.0, 2.0, 0.25) + 2.0);
    }

    #[test]
    fn bad_params_rejected() {
        assert!(C45Params { confidence: 0.7, ..Default::default() }.validate().is_err());
        assert!(C45Params { min_leaf: 0, ..Default::default() }.validate().is_err());
    }
}
