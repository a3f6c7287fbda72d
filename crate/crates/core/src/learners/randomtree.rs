//! Unpruned tree that considers a random subset of attributes per node.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::{nominal_split, numeric_split, AttrInfo, Instances, Split};
use super::tree::{DecisionTree, Node};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomTreeParams {
    /// Attributes drawn per node; `None` uses `ceil(log2(d) + 1)`.
    pub k: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for RandomTreeParams {
    fn default() -> Self {
        RandomTreeParams { k: None, min_leaf: 1, max_depth: None }
    }
}

impl RandomTreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == Some(0) {
            return Err(Error::InvalidParams("k must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidParams("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn default_k(d: usize) -> usize {
    if d == 0 {
        return 0;
    }
    (math::ceil(math::log2(d as f64) + 1.0) as usize).clamp(1, d)
}

fn evaluate(data: &Instances, idx: &[usize], a: usize, min_leaf: usize) -> Option<Split> {
    match data.info[a] {
        AttrInfo::Nominal(_) => nominal_split(data, idx, a, min_leaf),
        AttrInfo::Numeric => numeric_split(data, idx, a, min_leaf, false),
    }
}

fn grow(data: &Instances, idx: &[usize], params: &RandomTreeParams, k: usize, depth: usize, rng: &mut Rng) -> Node {
    let counts = data.counts(idx);
    let n = idx.len();
    let pure = counts.iter().any(|&c| c as usize == n);
    let too_deep = params.max_depth.is_some_and(|d| depth >= d);
    if n == 0 || pure || too_deep || n < 2 * params.min_leaf {
        return Node::leaf(counts);
    }
    let mut attrs: Vec<usize> = (0..data.info.len()).collect();
    attrs.shuffle(rng);
    let mut best: Option<Split> = None;
    for (tried, &a) in attrs.iter().enumerate() {
        // Keep drawing past k until some attribute has positive gain.
        if tried >= k && best.as_ref().is_some_and(|b| b.gain > 1e-10) {
            break;
        }
        if let Some(s) = evaluate(data, idx, a, params.min_leaf) {
            if best.as_ref().is_none_or(|b| s.gain > b.gain + 1e-12) {
                best = Some(s);
            }
        }
    }
    let Some(split) = best.filter(|s| s.gain > 1e-10) else {
        return Node::leaf(counts);
    };
    let children = split
        .branches
        .iter()
        .map(|b| {
            if b.is_empty() {
                Node::leaf(alloc::vec![0.0; data.n_classes])
            } else {
                grow(data, b, params, k, depth + 1, rng)
            }
        })
        .collect();
    Node::Split { test: split.test, counts, children }
}

pub(crate) fn train(data: &Instances, params: &RandomTreeParams, seed: u64) -> DecisionTree {
    let d = data.info.len();
    let k = params.k.unwrap_or_else(|| default_k(d)).min(d.max(1));
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut rng = rng::seeded(seed);
    DecisionTree { root: grow(data, &idx, params, k, 0, &mut rng) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_size() {
        assert_eq!(default_k(1), 1);
        assert_eq!(default_k(2), 2);
        assert_eq!(default_k(4), 3);
        assert_eq!(default_k(10), 5);
    }
}
