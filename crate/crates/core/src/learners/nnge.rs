//! NNge: nearest-neighbour classification over generalized exemplars.
//!
//! Instances are processed in the order given. Each one either extends
//! the nearest exemplar of its own class into a larger axis-aligned
//! hyperrectangle (when that does not swallow an instance of another
//! class seen so far) or becomes a new single-point exemplar. An
//! instance that falls inside a rectangle of another class forces that
//! rectangle to be rebuilt from its members so it excludes the instance.
//! Unlike the other learners the result depends on the row order.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::data::{AttrInfo, Feat, Instances};
use crate::error::{Error, Result};
use crate::math;
use crate::table::{AttrKind, AttributeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NngeParams {
    /// Added to distances before inverting them into class weights.
    pub epsilon: f64,
}

impl Default for NngeParams {
    fn default() -> Self {
        NngeParams { epsilon: 1e-3 }
    }
}

impl NngeParams {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidParams("epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// One axis of an exemplar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Encoded nominal categories (the last one stands for missing).
    Labels(BTreeSet<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub bounds: Vec<Bound>,
    pub class: usize,
    /// Number of training instances the exemplar absorbed.
    pub size: usize,
}

impl Exemplar {
    fn point(x: &[Feat], class: usize) -> Exemplar {
        let bounds = x
            .iter()
            .map(|f| match *f {
                Feat::Num(v) => Bound::Interval { lo: v, hi: v },
                Feat::Nom(c) => Bound::Labels(BTreeSet::from([c])),
            })
            .collect();
        Exemplar { bounds, class, size: 1 }
    }

    /// A single instance rather than a generalized rectangle.
    pub fn is_singular(&self) -> bool {
        self.size <= 1
    }

    fn contains(&self, x: &[Feat]) -> bool {
        self.bounds.iter().zip(x).all(|(b, f)| match b {
            Bound::Interval { lo, hi } => *lo <= f.num() && f.num() <= *hi,
            Bound::Labels(s) => s.contains(&f.nom()),
        })
    }

    fn extend(&mut self, x: &[Feat]) {
        for (b, f) in self.bounds.iter_mut().zip(x) {
            match b {
                Bound::Interval { lo, hi } => {
                    *lo = lo.min(f.num());
                    *hi = hi.max(f.num());
                }
                Bound::Labels(s) => {
                    s.insert(f.nom());
                }
            }
        }
        self.size += 1;
    }

    fn distance(&self, x: &[Feat], ranges: &[f64]) -> f64 {
        let mut sum = 0.0;
        for ((b, f), &range) in self.bounds.iter().zip(x).zip(ranges) {
            let d = match b {
                Bound::Interval { lo, hi } => {
                    let v = f.num();
                    let gap = if v < *lo {
                        *lo - v
                    } else if v > *hi {
                        v - *hi
                    } else {
                        0.0
                    };
                    if range > 0.0 {
                        (gap / range).min(1.0)
                    } else {
                        0.0
                    }
                }
                Bound::Labels(s) => f64::from(u8::from(!s.contains(&f.nom()))),
            };
            sum += d * d;
        }
        math::sqrt(sum)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub exemplars: Vec<Exemplar>,
    /// Training range per numeric attribute, used to scale distances.
    pub ranges: Vec<f64>,
    pub n_classes: usize,
    pub epsilon: f64,
}

impl ExemplarSet {
    /// Inverse-distance weights over the nearest exemplar of each class.
    pub(crate) fn distribution(&self, x: &[Feat]) -> Vec<f64> {
        let mut nearest = vec![f64::INFINITY; self.n_classes];
        for e in &self.exemplars {
            let d = e.distance(x, &self.ranges);
            if d < nearest[e.class] {
                nearest[e.class] = d;
            }
        }
        let mut w: Vec<f64> =
            nearest.iter().map(|&d| if d.is_finite() { 1.0 / (d + self.epsilon) } else { 0.0 }).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            for v in &mut w {
                *v /= total;
            }
        } else {
            w = vec![1.0 / self.n_classes as f64; self.n_classes];
        }
        w
    }

    /// Index of the nearest exemplar; ties keep the earliest.
    pub(crate) fn nearest(&self, x: &[Feat]) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, e) in self.exemplars.iter().enumerate() {
            let d = e.distance(x, &self.ranges);
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    pub fn render_exemplar(&self, i: usize, attrs: &[AttributeSpec], labels: &[String]) -> String {
        let e = &self.exemplars[i];
        let mut conds = Vec::new();
        for (spec, b) in attrs.iter().zip(&e.bounds) {
            match b {
                Bound::Interval { lo, hi } if lo == hi => conds.push(format!("{} = {}", spec.name, lo)),
                Bound::Interval { lo, hi } => conds.push(format!("{} <= {} <= {}", lo, spec.name, hi)),
                Bound::Labels(s) => {
                    let names: Vec<&str> = s
                        .iter()
                        .map(|&c| match &spec.kind {
                            AttrKind::Nominal(l) if c < l.len() => l[c].as_str(),
                            _ => "?",
                        })
                        .collect();
                    if names.len() == 1 {
                        conds.push(format!("{} = {}", spec.name, names[0]));
                    } else {
                        conds.push(format!("{} in {{{}}}", spec.name, names.join(",")));
                    }
                }
            }
        }
        format!("IF {} THEN {}", conds.join(" AND "), labels[e.class])
    }

    pub fn render(&self, attrs: &[AttributeSpec], labels: &[String]) -> String {
        let mut out = String::new();
        for i in 0..self.exemplars.len() {
            let _ = writeln!(out, "{}", self.render_exemplar(i, attrs, labels));
        }
        let _ = writeln!(out, "Number of Rules : {}", self.exemplars.len());
        out
    }
}

struct Builder<'a> {
    data: &'a Instances,
    exemplars: Vec<Exemplar>,
    members: Vec<Vec<usize>>,
    ranges: Vec<f64>,
}

impl Builder<'_> {
    fn would_swallow(&self, candidate: &Exemplar, seen: usize) -> bool {
        (0..seen).any(|j| self.data.y[j] != candidate.class && candidate.contains(&self.data.x[j]))
    }

    /// Rebuilds exemplar `e` from its members so that it no longer
    /// contains instance `i`. Members are regrouped greedily in their
    /// original order; a group closes when adding the next member would
    /// cover `i`.
    fn split(&mut self, e: usize, i: usize) {
        let class = self.exemplars[e].class;
        let data = self.data;
        let members = self.members.remove(e);
        self.exemplars.remove(e);
        let x = &data.x[i];
        let mut groups: Vec<(Exemplar, Vec<usize>)> = Vec::new();
        for m in members {
            let xm = &data.x[m];
            let slot = groups.iter().position(|(g, _)| {
                let mut trial = g.clone();
                trial.extend(xm);
                !trial.contains(x)
            });
            match slot {
                Some(s) => {
                    groups[s].0.extend(xm);
                    groups[s].1.push(m);
                }
                None => groups.push((Exemplar::point(xm, class), vec![m])),
            }
        }
        for (g, m) in groups {
            self.exemplars.push(g);
            self.members.push(m);
        }
    }

    /// Adds instance `i`; instances before it have been seen already.
    fn add(&mut self, i: usize) {
        let data = self.data;
        let x = &data.x[i];
        let class = data.y[i];
        // Single points identical to `x` cannot be split and are kept.
        while let Some(e) = self.exemplars.iter().position(|ex| ex.class != class && ex.size > 1 && ex.contains(x)) {
            self.split(e, i);
        }
        let mut order: Vec<(f64, usize)> = self
            .exemplars
            .iter()
            .enumerate()
            .filter(|(_, ex)| ex.class == class)
            .map(|(k, ex)| (ex.distance(x, &self.ranges), k))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some(&(_, k)) = order.first() {
            let mut trial = self.exemplars[k].clone();
            trial.extend(x);
            if !self.would_swallow(&trial, i) {
                self.exemplars[k] = trial;
                self.members[k].push(i);
                return;
            }
        }
        self.exemplars.push(Exemplar::point(x, class));
        self.members.push(vec![i]);
    }
}

pub(crate) fn train(data: &Instances, params: &NngeParams) -> ExemplarSet {
    let ranges = data
        .info
        .iter()
        .enumerate()
        .map(|(a, info)| match info {
            AttrInfo::Numeric => {
                let (lo, hi) = data
                    .x
                    .iter()
                    .map(|x| x[a].num())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
                if hi > lo {
                    hi - lo
                } else {
                    0.0
                }
            }
            AttrInfo::Nominal(_) => 1.0,
        })
        .collect();
    let mut b = Builder { data, exemplars: Vec::new(), members: Vec::new(), ranges };
    for i in 0..data.len() {
        b.add(i);
    }
    ExemplarSet { exemplars: b.exemplars, ranges: b.ranges, n_classes: data.n_classes, epsilon: params.epsilon }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Instances {
        let pts = [(0.0, 0), (1.0, 0), (2.0, 0), (10.0, 1), (11.0, 1), (1.5, 1)];
        Instances {
            info: vec![AttrInfo::Numeric],
            x: pts.iter().map(|p| vec![Feat::Num(p.0)]).collect(),
            y: pts.iter().map(|p| p.1).collect(),
            n_classes: 2,
        }
    }

    #[test]
    fn conflict_splits_rectangle() {
        let set = train(&toy(), &NngeParams::default());
        // The class-1 point at 1.5 must not lie inside any class-0 exemplar.
        for e in set.exemplars.iter().filter(|e| e.class == 0) {
            assert!(!e.contains(&[Feat::Num(1.5)]));
        }
        // Every training instance is classified correctly.
        let data = toy();
        for (x, &y) in data.x.iter().zip(&data.y) {
            assert_eq!(math::argmax(&set.distribution(x)), y);
        }
    }

    #[test]
    fn distribution_is_normalized() {
        let set = train(&toy(), &NngeParams::default());
        let d = set.distribution(&[Feat::Num(5.0)]);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
