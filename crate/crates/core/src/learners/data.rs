//! Internal encoded training data shared by the learners.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::table::{AttrKind, AttributeSpec, DataTable, Value};

/// An encoded attribute value. Nominal missing is the extra category
/// `n_labels`; numeric missing is replaced by the training median.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Feat {
    Num(f64),
    Nom(usize),
}

impl Feat {
    pub fn num(self) -> f64 {
        match self {
            Feat::Num(x) => x,
            Feat::Nom(i) => i as f64,
        }
    }

    pub fn nom(self) -> usize {
        match self {
            Feat::Nom(i) => i,
            Feat::Num(x) => x as usize,
        }
    }

    fn total_cmp(&self, other: &Feat) -> Ordering {
        match (self, other) {
            (Feat::Num(a), Feat::Num(b)) => a.total_cmp(b),
            (Feat::Nom(a), Feat::Nom(b)) => a.cmp(b),
            (Feat::Num(_), Feat::Nom(_)) => Ordering::Less,
            (Feat::Nom(_), Feat::Num(_)) => Ordering::Greater,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AttrInfo {
    Numeric,
    /// Number of labels; the encoded category count is one more.
    Nominal(usize),
}

impl AttrInfo {
    pub fn of(spec: &AttributeSpec) -> AttrInfo {
        match &spec.kind {
            AttrKind::Nominal(l) => AttrInfo::Nominal(l.len()),
            _ => AttrInfo::Numeric,
        }
    }

    pub fn categories(self) -> usize {
        match self {
            AttrInfo::Nominal(n) => n + 1,
            AttrInfo::Numeric => 0,
        }
    }
}

/// Maps raw values to `Feat`s. Stored in every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub(crate) medians: Vec<Option<f64>>,
}

impl Encoder {
    pub(crate) fn fit(attrs: &[AttributeSpec], rows: &[Vec<Value>]) -> Encoder {
        let medians = attrs
            .iter()
            .enumerate()
            .map(|(a, spec)| {
                if !spec.kind.is_numeric() {
                    return None;
                }
                let mut v: Vec<f64> = rows.iter().filter_map(|r| r[a].as_f64()).collect();
                if v.is_empty() {
                    return Some(0.0);
                }
                v.sort_by(f64::total_cmp);
                let m = v.len() / 2;
                Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
            })
            .collect();
        Encoder { medians }
    }

    pub(crate) fn identity(attrs: &[AttributeSpec]) -> Encoder {
        Encoder { medians: attrs.iter().map(|s| s.kind.is_numeric().then_some(0.0)).collect() }
    }

    pub(crate) fn encode(&self, attrs: &[AttributeSpec], values: &[Value]) -> Vec<Feat> {
        attrs
            .iter()
            .zip(values)
            .enumerate()
            .map(|(a, (spec, v))| match (&spec.kind, v) {
                (AttrKind::Nominal(_), Value::Nominal(i)) => Feat::Nom(*i),
                (AttrKind::Nominal(l), _) => Feat::Nom(l.len()),
                (_, Value::Numeric(x)) => Feat::Num(*x),
                _ => Feat::Num(self.medians[a].unwrap_or(0.0)),
            })
            .collect()
    }
}

/// Encoded instances with class indices.
#[derive(Debug, Clone)]
pub(crate) struct Instances {
    pub info: Vec<AttrInfo>,
    pub x: Vec<Vec<Feat>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

/// Input specs, class spec, encoder and encoded instances of a table.
/// Rows with a missing class are dropped.
pub(crate) fn from_table(table: &DataTable) -> Result<(Vec<AttributeSpec>, AttributeSpec, Encoder, Instances)> {
    let class_col = table.class_index().ok_or(Error::MissingClass)?;
    let class = table.specs()[class_col].clone();
    let n_classes = class.labels().ok_or_else(|| Error::InvalidSchema("class must be nominal".into()))?.len();
    let inputs = table.input_indices();
    let attrs: Vec<AttributeSpec> = inputs.iter().map(|&c| table.specs()[c].clone()).collect();
    let mut raw = Vec::new();
    let mut y = Vec::new();
    for row in table.rows() {
        if let Value::Nominal(c) = row[class_col] {
            raw.push(inputs.iter().map(|&c| row[c].clone()).collect::<Vec<_>>());
            y.push(c);
        }
    }
    let encoder = Encoder::fit(&attrs, &raw);
    let x = raw.iter().map(|r| encoder.encode(&attrs, r)).collect();
    let info = attrs.iter().map(AttrInfo::of).collect();
    Ok((attrs, class, encoder, Instances { info, x, y, n_classes }))
}

impl Instances {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn counts(&self, idx: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1.0;
        }
        c
    }

    /// Reorders rows into a canonical order (features, then class) so that
    /// learners become insensitive to the input row order.
    pub fn canonicalize(&mut self) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            for (fa, fb) in self.x[a].iter().zip(&self.x[b]) {
                let o = fa.total_cmp(fb);
                if o != Ordering::Equal {
                    return o;
                }
            }
            self.y[a].cmp(&self.y[b])
        });
        self.x = order.iter().map(|&i| self.x[i].clone()).collect();
        self.y = order.iter().map(|&i| self.y[i]).collect();
    }
}

/// A node test shared by all trees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Test {
    /// Multiway on every label plus a trailing missing branch.
    Nominal { attr: usize },
    /// Binary: `<= threshold` is branch 0, `> threshold` branch 1.
    Numeric { attr: usize, threshold: f64 },
}

impl Test {
    pub fn attr(&self) -> usize {
        match *self {
            Test::Nominal { attr } | Test::Numeric { attr, .. } => attr,
        }
    }

    pub(crate) fn branch(&self, x: &[Feat]) -> usize {
        match *self {
            Test::Nominal { attr } => x[attr].nom(),
            Test::Numeric { attr, threshold } => usize::from(x[attr].num() > threshold),
        }
    }
}

/// A candidate split and the instance partition it induces.
#[derive(Debug, Clone)]
pub(crate) struct Split {
    pub test: Test,
    pub gain: f64,
    pub ratio: f64,
    pub branches: Vec<Vec<usize>>,
}

pub(crate) fn info_of(counts: &[f64]) -> f64 {
    math::entropy(counts)
}

fn split_stats(data: &Instances, parent: &[f64], branches: &[Vec<usize>]) -> (f64, f64) {
    let n: f64 = parent.iter().sum();
    let mut after = 0.0;
    let mut split_info = 0.0;
    for b in branches {
        if b.is_empty() {
            continue;
        }
        let w = b.len() as f64;
        after += w / n * info_of(&data.counts(b));
        split_info -= math::xlog2x(w / n);
    }
    (info_of(parent) - after, split_info)
}

/// Multiway split on a nominal attribute. Valid when at least two
/// branches hold `min_leaf` instances.
pub(crate) fn nominal_split(data: &Instances, idx: &[usize], attr: usize, min_leaf: usize) -> Option<Split> {
    let cats = data.info[attr].categories();
    let mut branches = vec![Vec::new(); cats];
    for &i in idx {
        branches[data.x[i][attr].nom()].push(i);
    }
    if branches.iter().filter(|b| b.len() >= min_leaf).count() < 2 {
        return None;
    }
    let parent = data.counts(idx);
    let (gain, split_info) = split_stats(data, &parent, &branches);
    let ratio = if split_info > 0.0 { gain / split_info } else { 0.0 };
    Some(Split { test: Test::Nominal { attr }, gain, ratio, branches })
}

/// Best binary threshold on a numeric attribute by information gain.
/// Thresholds sit at midpoints between adjacent distinct values; each
/// side must hold at least `min_side` instances. With `mdl_penalty` the
/// gain is reduced by `log2(candidates) / n`.
pub(crate) fn numeric_split(
    data: &Instances,
    idx: &[usize],
    attr: usize,
    min_side: usize,
    mdl_penalty: bool,
) -> Option<Split> {
    let n = idx.len();
    if n < 2 * min_side.max(1) {
        return None;
    }
    let mut sorted: Vec<usize> = idx.to_vec();
    sorted.sort_by(|&a, &b| data.x[a][attr].num().total_cmp(&data.x[b][attr].num()).then(a.cmp(&b)));
    let parent = data.counts(idx);
    let parent_info = info_of(&parent);
    let k = data.n_classes;
    let mut left = vec![0.0; k];
    let mut right = parent.clone();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut candidates = 0usize;
    for pos in 0..n - 1 {
        let c = data.y[sorted[pos]];
        left[c] += 1.0;
        right[c] -= 1.0;
        let (v, next) = (data.x[sorted[pos]][attr].num(), data.x[sorted[pos + 1]][attr].num());
        if v >= next {
            continue;
        }
        candidates += 1;
        let nl = (pos + 1) as f64;
        if pos + 1 < min_side || n - pos - 1 < min_side {
            continue;
        }
        let nr = (n - pos - 1) as f64;
        let gain = parent_info - (nl * info_of(&left) + nr * info_of(&right)) / n as f64;
        if best.is_none_or(|(g, _, _)| gain > g + 1e-12) {
            best = Some((gain, pos, v + (next - v) / 2.0));
        }
    }
    let (mut gain, pos, threshold) = best?;
    if mdl_penalty && candidates > 0 {
        gain -= math::log2(candidates as f64) / n as f64;
    }
    let branches = [sorted[..=pos].to_vec(), sorted[pos + 1..].to_vec()];
    let mut lo = branches[0].clone();
    lo.sort_unstable();
    let mut hi = branches[1].clone();
    hi.sort_unstable();
    let nl = lo.len() as f64 / n as f64;
    let split_info = -(math::xlog2x(nl) + math::xlog2x(1.0 - nl));
    let ratio = if split_info > 0.0 { gain / split_info } else { 0.0 };
    Some(Split { test: Test::Numeric { attr, threshold }, gain, ratio, branches: vec![lo, hi] })
}

/// Laplace-smoothed class distribution `(c + 1) / (n + k)`.
pub(crate) fn laplace(counts: &[f64]) -> Vec<f64> {
    let n: f64 = counts.iter().sum();
    let k = counts.len() as f64;
    counts.iter().map(|c| (c + 1.0) / (n + k)).collect()
}
