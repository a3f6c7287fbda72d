//! RIPPER: sequential covering with IREP* growing/pruning, MDL-based
//! stopping and one optimization pass.
//!
//! Classes are learned in order of increasing frequency; the most
//! frequent class becomes the default rule. For each class, rules are
//! grown on two thirds of the remaining data by FOIL information gain
//! and pruned on the other third. Rule addition stops when the total
//! description length exceeds the best seen so far by 64 bits or when a
//! rule's error rate reaches one half.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::{AttrInfo, Instances};
use super::rules::{Condition, Rule, RuleList};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, Rng};

const MAX_DL_SURPLUS: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RipperParams {
    /// One of this many folds is used for pruning.
    pub folds: usize,
    /// Minimum number of instances an antecedent must cover.
    pub min_coverage: f64,
    pub optimizations: usize,
    pub check_error_rate: bool,
}

impl Default for RipperParams {
    fn default() -> Self {
        RipperParams { folds: 3, min_coverage: 2.0, optimizations: 1, check_error_rate: true }
    }
}

impl RipperParams {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidParams("folds must be >= 2".into()));
        }
        if self.min_coverage < 0.0 {
            return Err(Error::InvalidParams("min_coverage must be >= 0".into()));
        }
        Ok(())
    }
}

fn subset_dl(t: f64, k: f64, p: f64) -> f64 {
    let mut rt = if p > 0.0 && k > 0.0 { -k * math::log2(p) } else { 0.0 };
    if t - k > 0.0 {
        rt -= (t - k) * math::log2(1.0 - p);
    }
    rt
}

fn theory_dl(k: usize, all_conditions: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    let mut bits = math::log2(k);
    if k > 1.0 {
        bits += 2.0 * math::log2(bits);
    }
    (bits + subset_dl(all_conditions, k, k / all_conditions)) * 0.5
}

fn data_dl(exp_fp_over_err: f64, cover: f64, uncover: f64, fp: f64, fn_: f64) -> f64 {
    let total_bits = math::log2(cover + uncover + 1.0);
    let (cover_bits, uncover_bits);
    if cover > uncover {
        let exp_err = exp_fp_over_err * (fp + fn_);
        cover_bits = subset_dl(cover, fp, exp_err / cover);
        uncover_bits = if uncover > 0.0 { subset_dl(uncover, fn_, fn_ / uncover) } else { 0.0 };
    } else {
        let exp_err = (1.0 - exp_fp_over_err) * (fp + fn_);
        cover_bits = if cover > 0.0 { subset_dl(cover, fp, fp / cover) } else { 0.0 };
        uncover_bits = if uncover > 0.0 { subset_dl(uncover, fn_, exp_err / uncover) } else { 0.0 };
    }
    total_bits + cover_bits + uncover_bits
}

struct ClassCtx<'a> {
    data: &'a Instances,
    class: usize,
    exp_fp: f64,
    all_conditions: f64,
    params: &'a RipperParams,
}

fn covers(conds: &[Condition], data: &Instances, i: usize) -> bool {
    conds.iter().all(|c| c.matches(&data.x[i]))
}

impl ClassCtx<'_> {
    fn pos_neg(&self, conds: &[Condition], idx: &[usize]) -> (f64, f64) {
        let mut p = 0.0;
        let mut n = 0.0;
        for &i in idx {
            if covers(conds, self.data, i) {
                if self.data.y[i] == self.class {
                    p += 1.0;
                } else {
                    n += 1.0;
                }
            }
        }
        (p, n)
    }

    /// Total description length of a rule set for this class on `idx`.
    fn total_dl(&self, ruleset: &[Vec<Condition>], idx: &[usize]) -> f64 {
        let (mut cover, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for &i in idx {
            let is_pos = self.data.y[i] == self.class;
            if ruleset.iter().any(|r| covers(r, self.data, i)) {
                cover += 1.0;
                if !is_pos {
                    fp += 1.0;
                }
            } else if is_pos {
                fn_ += 1.0;
            }
        }
        let uncover = idx.len() as f64 - cover;
        let theory: f64 = ruleset.iter().map(|r| theory_dl(r.len(), self.all_conditions)).sum();
        theory + data_dl(self.exp_fp, cover, uncover, fp, fn_)
    }

    fn split(&self, idx: &[usize], rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
        let mut order = idx.to_vec();
        order.shuffle(rng);
        let mut grow = Vec::new();
        let mut prune = Vec::new();
        let folds = self.params.folds;
        let mut pos = 0;
        for positive in [true, false] {
            for &i in order.iter().filter(|&&i| (self.data.y[i] == self.class) == positive) {
                if pos % folds == folds - 1 {
                    prune.push(i);
                } else {
                    grow.push(i);
                }
                pos += 1;
            }
        }
        grow.sort_unstable();
        prune.sort_unstable();
        (grow, prune)
    }

    /// Adds antecedents by FOIL gain until the rule covers no negatives.
    fn grow(&self, start: Vec<Condition>, grow: &[usize]) -> Vec<Condition> {
        let data = self.data;
        let mut conds = start;
        let mut covered: Vec<usize> = grow.iter().copied().filter(|&i| covers(&conds, data, i)).collect();
        loop {
            let (p0, n0) = self.pos_neg(&[], &covered);
            if n0 == 0.0 || p0 == 0.0 {
                break;
            }
            let def_rate = (p0 + 1.0) / (p0 + n0 + 1.0);
            let gain_of = |p: f64, n: f64| {
                if p <= 0.0 || p + n < self.params.min_coverage {
                    return f64::NEG_INFINITY;
                }
                p * (math::log2((p + 1.0) / (p + n + 1.0)) - math::log2(def_rate))
            };
            let mut best: Option<(f64, Condition)> = None;
            let mut consider = |g: f64, c: Condition| {
                if g > 0.0 && best.is_none_or(|(bg, _)| g > bg + 1e-12) {
                    best = Some((g, c));
                }
            };
            for (attr, info) in data.info.iter().enumerate() {
                match *info {
                    AttrInfo::Nominal(_) => {
                        if conds.iter().any(|c| c.attr() == attr) {
                            continue;
                        }
                        let cats = info.categories();
                        let mut p = vec![0.0; cats];
                        let mut n = vec![0.0; cats];
                        for &i in &covered {
                            let v = data.x[i][attr].nom();
                            if data.y[i] == self.class {
                                p[v] += 1.0;
                            } else {
                                n[v] += 1.0;
                            }
                        }
                        for v in 0..cats {
                            consider(gain_of(p[v], n[v]), Condition::Eq { attr, value: v });
                        }
                    }
                    AttrInfo::Numeric => {
                        let mut sorted = covered.clone();
                        sorted.sort_by(|&a, &b| data.x[a][attr].num().total_cmp(&data.x[b][attr].num()));
                        let (mut pl, mut nl) = (0.0, 0.0);
                        for k in 0..sorted.len().saturating_sub(1) {
                            if data.y[sorted[k]] == self.class {
                                pl += 1.0;
                            } else {
                                nl += 1.0;
                            }
                            let (v, next) = (data.x[sorted[k]][attr].num(), data.x[sorted[k + 1]][attr].num());
                            if v >= next {
                                continue;
                            }
                            let threshold = v + (next - v) / 2.0;
                            let (gl, gr) = (gain_of(pl, nl), gain_of(p0 - pl, n0 - nl));
                            if gl >= gr {
                                consider(gl, Condition::Le { attr, threshold });
                            } else {
                                consider(gr, Condition::Gt { attr, threshold });
                            }
                        }
                    }
                }
            }
            let Some((_, cond)) = best else { break };
            conds.push(cond);
            covered.retain(|&i| cond.matches(&data.x[i]));
        }
        conds
    }

    /// Keeps the prefix of `conds` with the best worth; ties keep the
    /// shorter prefix. `min_len` protects an initial prefix.
    fn prune(&self, conds: Vec<Condition>, min_len: usize, worth: impl Fn(&[Condition]) -> f64) -> Vec<Condition> {
        if conds.len() <= min_len {
            return conds;
        }
        let mut best_len = min_len.max(1).min(conds.len());
        let mut best = worth(&conds[..best_len]);
        for len in best_len + 1..=conds.len() {
            let w = worth(&conds[..len]);
            if w > best + 1e-12 {
                best = w;
                best_len = len;
            }
        }
        let mut conds = conds;
        conds.truncate(best_len);
        conds
    }

    fn rule_worth(&self, prune: &[usize]) -> impl Fn(&[Condition]) -> f64 + '_ {
        let prune = prune.to_vec();
        move |c: &[Condition]| {
            let (p, n) = self.pos_neg(c, &prune);
            (p + 1.0) / (p + n + 2.0)
        }
    }

    /// Accuracy on `prune` of the rule set with rule `at` replaced.
    fn ruleset_worth<'b>(
        &'b self,
        ruleset: &'b [Vec<Condition>],
        at: usize,
        prune: &'b [usize],
    ) -> impl Fn(&[Condition]) -> f64 + 'b {
        move |c: &[Condition]| {
            let mut correct = 0.0;
            for &i in prune {
                let fired = ruleset.iter().enumerate().any(|(j, r)| {
                    if j == at {
                        covers(c, self.data, i)
                    } else {
                        covers(r, self.data, i)
                    }
                });
                if fired == (self.data.y[i] == self.class) {
                    correct += 1.0;
                }
            }
            correct
        }
    }

    /// IREP*: keeps adding rules while positives remain and the stopping
    /// criteria allow. `base` is the data the class started with.
    fn cover(&self, ruleset: &mut Vec<Vec<Condition>>, base: &[usize], rng: &mut Rng) {
        let mut remaining: Vec<usize> =
            base.iter().copied().filter(|&i| !ruleset.iter().any(|r| covers(r, self.data, i))).collect();
        let mut min_dl = self.total_dl(ruleset, base);
        loop {
            let (pos, _) = self.pos_neg(&[], &remaining);
            if pos == 0.0 {
                break;
            }
            let (grow, prune) = self.split(&remaining, rng);
            let rule = self.grow(Vec::new(), &grow);
            let rule = if prune.is_empty() { rule } else { self.prune(rule, 0, self.rule_worth(&prune)) };
            if rule.is_empty() {
                break;
            }
            let (p, n) = self.pos_neg(&rule, &prune);
            let (p, n) = if p + n > 0.0 { (p, n) } else { self.pos_neg(&rule, &grow) };
            if self.params.check_error_rate && n / (p + n) >= 0.5 {
                break;
            }
            ruleset.push(rule);
            let dl = self.total_dl(ruleset, base);
            if dl > min_dl + MAX_DL_SURPLUS {
                ruleset.pop();
                break;
            }
            min_dl = min_dl.min(dl);
            let last = ruleset.last().expect("just pushed");
            remaining.retain(|&i| !covers(last, self.data, i));
        }
    }

    fn optimize(&self, ruleset: &mut [Vec<Condition>], base: &[usize], rng: &mut Rng) {
        for at in 0..ruleset.len() {
            let data_i: Vec<usize> =
                base.iter().copied().filter(|&i| !ruleset[..at].iter().any(|r| covers(r, self.data, i))).collect();
            let (grow, prune) = self.split(&data_i, rng);
            if prune.is_empty() {
                continue;
            }
            let replacement = self.grow(Vec::new(), &grow);
            let replacement = self.prune(replacement, 0, self.ruleset_worth(ruleset, at, &prune));
            let original = ruleset[at].clone();
            let revision = self.grow(original.clone(), &grow);
            let revision = self.prune(revision, original.len(), self.ruleset_worth(ruleset, at, &prune));

            let mut best_dl = self.total_dl(ruleset, base);
            let mut best = original;
            for candidate in [replacement, revision] {
                if candidate.is_empty() {
                    continue;
                }
                ruleset[at] = candidate.clone();
                let dl = self.total_dl(ruleset, base);
                if dl < best_dl - 1e-9 {
                    best_dl = dl;
                    best = candidate;
                }
            }
            ruleset[at] = best;
        }
    }

    /// Deletes rules, last first, whenever that lowers the description length.
    fn reduce_dl(&self, ruleset: &mut Vec<Vec<Condition>>, base: &[usize]) {
        let mut at = ruleset.len();
        while at > 0 {
            at -= 1;
            let current = self.total_dl(ruleset, base);
            let removed = ruleset.remove(at);
            if self.total_dl(ruleset, base) >= current {
                ruleset.insert(at, removed);
            }
        }
    }
}

fn count_conditions(data: &Instances) -> f64 {
    let mut total = 0.0;
    for (a, info) in data.info.iter().enumerate() {
        total += match info {
            AttrInfo::Nominal(n) => *n as f64,
            AttrInfo::Numeric => {
                let mut v: Vec<f64> = data.x.iter().map(|x| x[a].num()).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                2.0 * v.len() as f64
            }
        };
    }
    total.max(1.0)
}

pub(crate) fn train(data: &Instances, params: &RipperParams, seed: u64) -> RuleList {
    let all: Vec<usize> = (0..data.len()).collect();
    let totals = data.counts(&all);
    let mut order: Vec<usize> = (0..data.n_classes).collect();
    order.sort_by(|&a, &b| totals[a].total_cmp(&totals[b]).then(a.cmp(&b)));
    let default_class = *order.last().expect("at least one class");
    let all_conditions = count_conditions(data);
    let mut rng = rng::seeded(seed);

    let mut remaining = all;
    let mut learned: Vec<(usize, Vec<Condition>)> = Vec::new();
    for &class in &order[..order.len() - 1] {
        let positives = remaining.iter().filter(|&&i| data.y[i] == class).count();
        if positives == 0 {
            continue;
        }
        let ctx = ClassCtx { data, class, exp_fp: positives as f64 / remaining.len() as f64, all_conditions, params };
        let mut ruleset = Vec::new();
        ctx.cover(&mut ruleset, &remaining, &mut rng);
        for _ in 0..params.optimizations {
            ctx.optimize(&mut ruleset, &remaining, &mut rng);
            ctx.cover(&mut ruleset, &remaining, &mut rng);
        }
        ctx.reduce_dl(&mut ruleset, &remaining);
        remaining.retain(|&i| !ruleset.iter().any(|r| covers(r, data, i)));
        learned.extend(ruleset.into_iter().map(|r| (class, r)));
    }

    // Coverage counts under first-match semantics.
    let mut rules: Vec<Rule> = learned
        .into_iter()
        .map(|(class, conditions)| Rule { conditions, class, counts: vec![0.0; data.n_classes] })
        .collect();
    let mut default_counts = vec![0.0; data.n_classes];
    for i in 0..data.len() {
        match rules.iter().position(|r| r.matches(&data.x[i])) {
            Some(r) => rules[r].counts[data.y[i]] += 1.0,
            None => default_counts[data.y[i]] += 1.0,
        }
    }
    RuleList { rules, default_class, default_counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_dl_edges() {
        assert_eq!(subset_dl(4.0, 0.0, 0.0), 0.0);
        assert!((subset_dl(4.0, 2.0, 0.5) - 4.0).abs() < 1e-12);
        assert_eq!(theory_dl(0, 10.0), 0.0);
        assert!(theory_dl(2, 10.0) > theory_dl(1, 10.0));
    }

    #[test]
    fn data_dl_perfect_cover_is_small() {
        let perfect = data_dl(0.5, 10.0, 10.0, 0.0, 0.0);
        let sloppy = data_dl(0.5, 10.0, 10.0, 3.0, 3.0);
        assert!(perfect < sloppy);
    }
}
