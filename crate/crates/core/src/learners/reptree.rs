//! REPTree: information-gain tree with reduced-error pruning on a
//! stratified holdout fold, followed by backfitting the holdout counts.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::{nominal_split, numeric_split, AttrInfo, Feat, Instances, Split};
use super::tree::{DecisionTree, Node};
use crate::error::{Error, Result};
use crate::math;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepTreeParams {
    pub min_leaf: usize,
    /// One of this many stratified folds is held out for pruning.
    pub folds: usize,
    pub prune: bool,
    pub max_depth: Option<usize>,
}

impl Default for RepTreeParams {
    fn default() -> Self {
        RepTreeParams { min_leaf: 2, folds: 3, prune: true, max_depth: None }
    }
}

impl RepTreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::InvalidParams("min_leaf must be >= 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParams("pruning folds must be >= 2".into()));
        }
        Ok(())
    }
}

/// Highest-gain split over `attrs`; ties keep the earlier candidate.
pub(crate) fn best_gain_split(data: &Instances, idx: &[usize], attrs: &[usize], min_leaf: usize) -> Option<Split> {
    let mut best: Option<Split> = None;
    for &a in attrs {
        let s = match data.info[a] {
            AttrInfo::Nominal(_) => nominal_split(data, idx, a, min_leaf),
            AttrInfo::Numeric => numeric_split(data, idx, a, min_leaf, false),
        };
        if let Some(s) = s {
            if best.as_ref().is_none_or(|b| s.gain > b.gain + 1e-12) {
                best = Some(s);
            }
        }
    }
    best.filter(|s| s.gain > 1e-10)
}

fn grow(data: &Instances, idx: &[usize], params: &RepTreeParams, depth: usize) -> Node {
    let counts = data.counts(idx);
    let n = idx.len();
    let pure = counts.iter().any(|&c| c as usize == n);
    let too_deep = params.max_depth.is_some_and(|d| depth >= d);
    if n == 0 || pure || too_deep || n < 2 * params.min_leaf {
        return Node::leaf(counts);
    }
    let attrs: Vec<usize> = (0..data.info.len()).collect();
    let Some(split) = best_gain_split(data, idx, &attrs, params.min_leaf) else {
        return Node::leaf(counts);
    };
    let children =
        split
            .branches
            .iter()
            .map(|b| {
                if b.is_empty() {
                    Node::leaf(alloc::vec![0.0; data.n_classes])
                } else {
                    grow(data, b, params, depth + 1)
                }
            })
            .collect();
    Node::Split { test: split.test, counts, children }
}

fn class_of(counts: &[f64], fallback: usize) -> usize {
    if counts.iter().sum::<f64>() > 0.0 {
        math::argmax(counts)
    } else {
        fallback
    }
}

/// Bottom-up reduced-error pruning; returns the holdout error count.
fn rep(node: Node, data: &Instances, hold: &[usize], fallback: usize) -> (Node, f64) {
    let cls = class_of(node.counts(), fallback);
    let leaf_err = hold.iter().filter(|&&i| data.y[i] != cls).count() as f64;
    match node {
        Node::Leaf { .. } => (node, leaf_err),
        Node::Split { test, counts, children } => {
            let mut parts = alloc::vec![Vec::new(); children.len()];
            for &i in hold {
                parts[test.branch(&data.x[i]).min(children.len() - 1)].push(i);
            }
            let mut subtree_err = 0.0;
            let mut pruned = Vec::with_capacity(children.len());
            for (child, part) in children.into_iter().zip(&parts) {
                let (c, e) = rep(child, data, part, cls);
                subtree_err += e;
                pruned.push(c);
            }
            if leaf_err <= subtree_err {
                (Node::leaf(counts), leaf_err)
            } else {
                (Node::Split { test, counts, children: pruned }, subtree_err)
            }
        }
    }
}

fn backfit(node: &mut Node, x: &[Feat], y: usize) {
    node.counts_mut()[y] += 1.0;
    if let Node::Split { test, children, .. } = node {
        let b = test.branch(x).min(children.len() - 1);
        backfit(&mut children[b], x, y);
    }
}

/// Stratified assignment of instances to folds after a seeded shuffle.
pub(crate) fn stratified_folds(y: &[usize], n_classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut fold = alloc::vec![0; y.len()];
    let mut pos = 0;
    for c in 0..n_classes {
        for &i in order.iter().filter(|&&i| y[i] == c) {
            fold[i] = pos % folds;
            pos += 1;
        }
    }
    fold
}

pub(crate) fn train(data: &Instances, params: &RepTreeParams, seed: u64) -> DecisionTree {
    let n = data.len();
    if !params.prune || n < params.folds {
        let idx: Vec<usize> = (0..n).collect();
        return DecisionTree { root: grow(data, &idx, params, 0) };
    }
    let fold = stratified_folds(&data.y, data.n_classes, params.folds, seed);
    let (hold, grow_idx): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold[i] == 0);
    let root = grow(data, &grow_idx, params, 0);
    let fallback = math::argmax(&data.counts(&grow_idx));
    let (mut root, _) = rep(root, data, &hold, fallback);
    for &i in &hold {
        backfit(&mut root, &data.x[i], data.y[i]);
    }
    DecisionTree { root }
}
