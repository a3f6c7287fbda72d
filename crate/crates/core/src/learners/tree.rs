//! Decision tree structure, prediction and the text rendering shared by
//! the three tree learners.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::data::{laplace, Feat, Test};
use crate::math;
use crate::table::{AttrKind, AttributeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { counts: Vec<f64> },
    Split { test: Test, counts: Vec<f64>, children: Vec<Node> },
}

impl Node {
    pub fn counts(&self) -> &[f64] {
        match self {
            Node::Leaf { counts } | Node::Split { counts, .. } => counts,
        }
    }

    pub(crate) fn counts_mut(&mut self) -> &mut Vec<f64> {
        match self {
            Node::Leaf { counts } | Node::Split { counts, .. } => counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    pub(crate) fn leaf(counts: Vec<f64>) -> Node {
        Node::Leaf { counts }
    }

    fn total(&self) -> f64 {
        self.counts().iter().sum()
    }

    /// Training-set errors summed over the leaves of this subtree.
    pub(crate) fn training_errors(&self) -> f64 {
        match self {
            Node::Leaf { counts } => leaf_errors(counts),
            Node::Split { children, .. } => children.iter().map(Node::training_errors).sum(),
        }
    }

    fn rendered(&self, is_missing_slot: bool) -> bool {
        !(is_missing_slot && self.total() == 0.0)
    }

    fn leaves(&self, missing_slot: bool) -> usize {
        match self {
            Node::Leaf { .. } => usize::from(self.rendered(missing_slot)),
            Node::Split { test, children, .. } => {
                children.iter().enumerate().map(|(i, c)| c.leaves(is_missing_branch(test, i, children.len()))).sum()
            }
        }
    }

    fn size(&self, missing_slot: bool) -> usize {
        if !self.rendered(missing_slot) {
            return 0;
        }
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { test, children, .. } => {
                1 + children
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.size(is_missing_branch(test, i, children.len())))
                    .sum::<usize>()
            }
        }
    }
}

fn is_missing_branch(test: &Test, i: usize, n: usize) -> bool {
    matches!(test, Test::Nominal { .. }) && i + 1 == n
}

pub(crate) fn leaf_errors(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    n - counts[math::argmax(counts)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

/// Leaf reached by an instance, with the counts used for prediction.
pub(crate) struct Reached<'a> {
    pub counts: &'a [f64],
    pub path: Vec<(Test, usize)>,
}

impl DecisionTree {
    /// Walks to a leaf. Empty leaves fall back to the nearest ancestor
    /// with training instances.
    pub(crate) fn reach(&self, x: &[Feat]) -> Reached<'_> {
        let mut node = &self.root;
        let mut fallback: &[f64] = node.counts();
        let mut path = Vec::new();
        loop {
            if node.total() > 0.0 {
                fallback = node.counts();
            }
            match node {
                Node::Leaf { .. } => return Reached { counts: fallback, path },
                Node::Split { test, children, .. } => {
                    let b = test.branch(x).min(children.len() - 1);
                    path.push((*test, b));
                    node = &children[b];
                }
            }
        }
    }

    pub(crate) fn distribution(&self, x: &[Feat]) -> Vec<f64> {
        laplace(self.reach(x).counts)
    }

    pub fn num_leaves(&self) -> usize {
        self.root.leaves(false)
    }

    pub fn size(&self) -> usize {
        self.root.size(false)
    }

    /// Renders the tree as nested IF / ELSE IF branches with `| `
    /// indentation per level, followed by the leaf count and tree size.
    pub fn render(&self, attrs: &[AttributeSpec], class_labels: &[String]) -> String {
        let mut out = String::new();
        match &self.root {
            Node::Leaf { counts } => {
                let _ = writeln!(out, "ELSE {}", class_labels[math::argmax(counts)]);
            }
            node => render_children(node, node.counts(), 0, attrs, class_labels, &mut out),
        }
        let _ = writeln!(out, "Number of Leaves: {}", self.num_leaves());
        let _ = writeln!(out, "Size of the tree : {}", self.size());
        out
    }
}

pub(crate) fn condition_text(test: &Test, branch: usize, attrs: &[AttributeSpec]) -> String {
    match *test {
        Test::Nominal { attr } => {
            let spec = &attrs[attr];
            let label = match &spec.kind {
                AttrKind::Nominal(l) if branch < l.len() => l[branch].as_str(),
                _ => "?",
            };
            format!("{} = {}", spec.name, label)
        }
        Test::Numeric { attr, threshold } => {
            let op = if branch == 0 { "<=" } else { ">" };
            format!("{} {} {}", attrs[attr].name, op, threshold)
        }
    }
}

fn render_children(
    node: &Node,
    inherited: &[f64],
    depth: usize,
    attrs: &[AttributeSpec],
    labels: &[String],
    out: &mut String,
) {
    let Node::Split { test, children, counts } = node else { return };
    let inherited = if counts.iter().sum::<f64>() > 0.0 { counts.as_slice() } else { inherited };
    let mut first = true;
    for (i, child) in children.iter().enumerate() {
        if !child.rendered(is_missing_branch(test, i, children.len())) {
            continue;
        }
        let prefix = if depth == 0 {
            if first {
                String::from("IF ")
            } else {
                String::from("ELSE IF ")
            }
        } else {
            "| ".repeat(depth)
        };
        first = false;
        let cond = condition_text(test, i, attrs);
        match child {
            Node::Leaf { counts } => {
                let source = if counts.iter().sum::<f64>() > 0.0 { counts.as_slice() } else { inherited };
                let _ = writeln!(out, "{prefix}{cond} THEN {}", labels[math::argmax(source)]);
            }
            Node::Split { .. } => {
                let _ = writeln!(out, "{prefix}{cond}");
                render_children(child, inherited, depth + 1, attrs, labels, out);
            }
        }
    }
}

/// Builds a tree from nested closures; used by tests in this crate.
#[cfg(test)]
pub(crate) fn stump(attr: usize, threshold: f64, left: Vec<f64>, right: Vec<f64>) -> DecisionTree {
    let counts = left.iter().zip(&right).map(|(a, b)| a + b).collect();
    DecisionTree {
        root: Node::Split {
            test: Test::Numeric { attr, threshold },
            counts,
            children: alloc::vec![Node::leaf(left), Node::leaf(right)],
        },
    }
}
