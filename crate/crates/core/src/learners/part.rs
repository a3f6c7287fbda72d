//! PART: rule lists from repeatedly built partial C4.5 trees.
//!
//! Each iteration grows a partial tree on the instances not yet covered,
//! expanding subsets in order of increasing entropy and stopping at the
//! first subset that does not turn into a leaf. Fully expanded nodes are
//! subject to the usual pessimistic subtree-replacement test. The leaf
//! with the largest coverage becomes the next rule and its instances are
//! removed.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::c45::{estimated_leaf_errors, select_split};
use super::data::{info_of, Instances, Test};
use super::rules::{Condition, Rule, RuleList};
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartParams {
    pub confidence: f64,
    pub min_leaf: usize,
}

impl Default for PartParams {
    fn default() -> Self {
        PartParams { confidence: 0.25, min_leaf: 2 }
    }
}

impl PartParams {
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

enum Partial {
    Leaf(Vec<f64>),
    Unexpanded,
    Split { test: Test, children: Vec<Partial> },
}

fn expand(data: &Instances, idx: &[usize], params: &PartParams) -> Partial {
    let counts = data.counts(idx);
    let n = idx.len();
    let pure = counts.iter().any(|&c| c as usize == n);
    if n == 0 || pure || n < 2 * params.min_leaf {
        return Partial::Leaf(counts);
    }
    let Some(split) = select_split(data, idx, params.min_leaf) else {
        return Partial::Leaf(counts);
    };
    let mut children: Vec<Partial> = split
        .branches
        .iter()
        .map(|b| if b.is_empty() { Partial::Leaf(vec![0.0; data.n_classes]) } else { Partial::Unexpanded })
        .collect();
    let mut order: Vec<(f64, usize)> = split
        .branches
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(i, b)| (info_of(&data.counts(b)), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, i) in order {
        let child = expand(data, &split.branches[i], params);
        let stop = !matches!(child, Partial::Leaf(_));
        children[i] = child;
        if stop {
            break;
        }
    }
    let all_leaves = children.iter().all(|c| matches!(c, Partial::Leaf(_)));
    if all_leaves {
        let tree_est: f64 = children
            .iter()
            .map(|c| match c {
                Partial::Leaf(counts) => estimated_leaf_errors(counts, params.confidence),
                _ => 0.0,
            })
            .sum();
        if estimated_leaf_errors(&counts, params.confidence) <= tree_est + 0.1 {
            return Partial::Leaf(counts);
        }
    }
    Partial::Split { test: split.test, children }
}

fn condition(test: &Test, branch: usize) -> Condition {
    match *test {
        Test::Nominal { attr } => Condition::Eq { attr, value: branch },
        Test::Numeric { attr, threshold } if branch == 0 => Condition::Le { attr, threshold },
        Test::Numeric { attr, threshold } => Condition::Gt { attr, threshold },
    }
}

/// Largest non-empty expanded leaf; ties keep the first in branch order.
fn best_leaf(node: &Partial, path: &mut Vec<Condition>, best: &mut Option<(f64, Vec<Condition>, Vec<f64>)>) {
    match node {
        Partial::Leaf(counts) => {
            let n: f64 = counts.iter().sum();
            if n > 0.0 && best.as_ref().is_none_or(|(b, _, _)| n > *b) {
                *best = Some((n, path.clone(), counts.clone()));
            }
        }
        Partial::Unexpanded => {}
        Partial::Split { test, children } => {
            for (i, c) in children.iter().enumerate() {
                path.push(condition(test, i));
                best_leaf(c, path, best);
                path.pop();
            }
        }
    }
}

pub(crate) fn train(data: &Instances, params: &PartParams) -> RuleList {
    let mut remaining: Vec<usize> = (0..data.len()).collect();
    let mut rules = Vec::new();
    let mut default = None;
    while !remaining.is_empty() {
        let tree = expand(data, &remaining, params);
        let mut best = None;
        best_leaf(&tree, &mut Vec::new(), &mut best);
        let Some((_, conditions, counts)) = best else { break };
        let class = math::argmax(&counts);
        if conditions.is_empty() {
            default = Some((class, counts));
            break;
        }
        let rule = Rule { conditions, class, counts };
        remaining.retain(|&i| !rule.matches(&data.x[i]));
        rules.push(rule);
    }
    let (default_class, default_counts) = default.unwrap_or_else(|| {
        let all: Vec<usize> = (0..data.len()).collect();
        (math::argmax(&data.counts(&all)), vec![0.0; data.n_classes])
    });
    RuleList { rules, default_class, default_counts }
}
