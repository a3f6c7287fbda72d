//! Correlation-based feature subset selection.
//!
//! Attributes are compared through symmetric uncertainty on discrete
//! codes. Numeric columns are discretized against the class with the
//! Fayyad-Irani MDL criterion first. The search is best-first forward
//! selection from the empty subset.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::table::{AttrKind, DataTable, Role, Value};

/// Expansions without improvement before the search gives up.
pub const STALL_LIMIT: usize = 5;

/// Bins used when MDL accepts no cut point.
const FALLBACK_BINS: usize = 10;

fn entropy_of(codes: &[usize]) -> f64 {
    let k = codes.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0.0; k];
    for &c in codes {
        counts[c] += 1.0;
    }
    math::entropy(&counts)
}

/// SU(a, b) = 2 I(a; b) / (H(a) + H(b)) over paired discrete codes.
/// Defined as 0 when both variables are constant.
pub fn symmetric_uncertainty(a: &[usize], b: &[usize]) -> f64 {
    let ha = entropy_of(a);
    let hb = entropy_of(b);
    if ha + hb <= 0.0 {
        return 0.0;
    }
    let kb = b.iter().copied().max().map_or(0, |m| m + 1);
    let joint: Vec<usize> = a.iter().zip(b).map(|(&x, &y)| x * kb + y).collect();
    let hab = entropy_of(&joint);
    (2.0 * (ha + hb - hab) / (ha + hb)).clamp(0.0, 1.0)
}

fn class_entropy(idx: &[usize], values: &[(f64, usize)], k: usize) -> (f64, usize) {
    let mut counts = vec![0.0; k];
    for &i in idx {
        counts[values[i].1] += 1.0;
    }
    let present = counts.iter().filter(|&&c| c > 0.0).count();
    (math::entropy(&counts), present)
}

/// Recursive Fayyad-Irani cut points over `sorted[lo..hi]`.
fn mdl_cuts(sorted: &[(f64, usize)], lo: usize, hi: usize, k: usize, cuts: &mut Vec<f64>) {
    let n = hi - lo;
    if n < 2 {
        return;
    }
    let all: Vec<usize> = (lo..hi).collect();
    let (ent, k_all) = class_entropy(&all, sorted, k);
    let mut left = vec![0.0; k];
    let mut total = vec![0.0; k];
    for &(_, c) in &sorted[lo..hi] {
        total[c] += 1.0;
    }
    let mut best: Option<(f64, usize)> = None;
    for i in lo..hi - 1 {
        left[sorted[i].1] += 1.0;
        if sorted[i].0 >= sorted[i + 1].0 {
            continue;
        }
        let nl = (i + 1 - lo) as f64;
        let right: Vec<f64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let e = (nl * math::entropy(&left) + (n as f64 - nl) * math::entropy(&right)) / n as f64;
        if best.is_none_or(|(b, _)| e < b - 1e-12) {
            best = Some((e, i + 1));
        }
    }
    let Some((e, cut)) = best else { return };
    let l: Vec<usize> = (lo..cut).collect();
    let r: Vec<usize> = (cut..hi).collect();
    let (el, kl) = class_entropy(&l, sorted, k);
    let (er, kr) = class_entropy(&r, sorted, k);
    let gain = ent - e;
    let delta = math::log2(libm::pow(3.0, k_all as f64) - 2.0) - (k_all as f64 * ent - kl as f64 * el - kr as f64 * er);
    let nf = n as f64;
    if gain <= (math::log2(nf - 1.0) + delta) / nf {
        return;
    }
    mdl_cuts(sorted, lo, cut, k, cuts);
    cuts.push(sorted[cut - 1].0 + (sorted[cut].0 - sorted[cut - 1].0) / 2.0);
    mdl_cuts(sorted, cut, hi, k, cuts);
}

/// Discrete codes for a numeric column. Missing values get their own code.
fn discretize_numeric(values: &[Option<f64>], class: &[usize], k: usize) -> Vec<usize> {
    let mut sorted: Vec<(f64, usize)> = values.iter().zip(class).filter_map(|(v, &c)| v.map(|x| (x, c))).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut cuts = Vec::new();
    mdl_cuts(&sorted, 0, sorted.len(), k, &mut cuts);
    if cuts.is_empty() {
        let lo = sorted.first().map_or(0.0, |p| p.0);
        let hi = sorted.last().map_or(0.0, |p| p.0);
        let w = (hi - lo) / FALLBACK_BINS as f64;
        cuts = if w > 0.0 { (1..FALLBACK_BINS).map(|i| lo + i as f64 * w).collect() } else { Vec::new() };
    }
    let bin = |x: f64| cuts.iter().filter(|&&c| x > c).count();
    let missing = values.iter().flatten().map(|&x| bin(x)).max().map_or(0, |m| m + 1);
    values.iter().map(|v| v.map_or(missing, bin)).collect()
}

/// Precomputed symmetric uncertainties for the inputs of one table.
#[derive(Debug, Clone)]
pub struct CfsEvaluator {
    names: Vec<String>,
    class_su: Vec<f64>,
    pair_su: Vec<Vec<f64>>,
}

impl CfsEvaluator {
    pub fn new(table: &DataTable) -> Result<CfsEvaluator> {
        let class_col = table.class_index().ok_or(Error::MissingClass)?;
        let k = table.class_labels().map_or(0, <[String]>::len);
        let rows: Vec<usize> = (0..table.n_rows()).filter(|&r| !table.rows()[r][class_col].is_missing()).collect();
        let class: Vec<usize> = rows.iter().map(|&r| table.rows()[r][class_col].as_index().unwrap_or(0)).collect();
        let inputs: Vec<usize> =
            table.input_indices().into_iter().filter(|&c| table.specs()[c].role == Role::Input).collect();
        let mut names = Vec::new();
        let mut codes = Vec::new();
        for &c in &inputs {
            let spec = &table.specs()[c];
            let column = rows.iter().map(|&r| &table.rows()[r][c]);
            let coded = match &spec.kind {
                AttrKind::Nominal(labels) => column
                    .map(|v| match v {
                        Value::Nominal(i) => *i,
                        _ => labels.len(),
                    })
                    .collect(),
                _ => {
                    let values: Vec<Option<f64>> = column.map(Value::as_f64).collect();
                    discretize_numeric(&values, &class, k)
                }
            };
            names.push(spec.name.clone());
            codes.push(coded);
        }
        let class_su = codes.iter().map(|c| symmetric_uncertainty(c, &class)).collect();
        let d = codes.len();
        let mut pair_su = vec![vec![1.0; d]; d];
        for i in 0..d {
            for j in i + 1..d {
                let su = symmetric_uncertainty(&codes[i], &codes[j]);
                pair_su[i][j] = su;
                pair_su[j][i] = su;
            }
        }
        Ok(CfsEvaluator { names, class_su, pair_su })
    }

    /// Input attribute names in table order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn class_su(&self, attr: usize) -> f64 {
        self.class_su[attr]
    }

    pub fn pair_su(&self, a: usize, b: usize) -> f64 {
        self.pair_su[a][b]
    }

    /// Merit k * mean(r_cf) / sqrt(k + k (k - 1) mean(r_ff)) of a subset
    /// given by input positions.
    pub fn merit(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let k = subset.len() as f64;
        let rcf: f64 = subset.iter().map(|&a| self.class_su[a]).sum::<f64>() / k;
        let mut rff = 0.0;
        if subset.len() > 1 {
            let mut pairs = 0.0;
            for (i, &a) in subset.iter().enumerate() {
                for &b in &subset[i + 1..] {
                    rff += self.pair_su[a][b];
                    pairs += 1.0;
                }
            }
            rff /= pairs;
        }
        let denom = math::sqrt(k + k * (k - 1.0) * rff);
        Ok(if denom > 0.0 { k * rcf / denom } else { 0.0 })
    }

    /// Best-first forward search. Returns input positions in table order
    /// and the merit of the subset.
    pub fn best_first(&self) -> (Vec<usize>, f64) {
        let d = self.names.len();
        let mut best: (Vec<usize>, f64) = (Vec::new(), 0.0);
        let mut open: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new())];
        let mut visited: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut stale = 0;
        while stale < STALL_LIMIT {
            // Highest merit first; ties keep the earliest inserted.
            let Some(pos) = (0..open.len()).fold(None, |acc: Option<usize>, i| match acc {
                Some(b) if open[b].0 >= open[i].0 => Some(b),
                _ => Some(i),
            }) else {
                break;
            };
            let (_, subset) = open.remove(pos);
            let mut improved = false;
            for a in 0..d {
                if subset.contains(&a) {
                    continue;
                }
                let mut child = subset.clone();
                child.push(a);
                child.sort_unstable();
                if !visited.insert(child.clone()) {
                    continue;
                }
                let m = self.merit(&child).unwrap_or(0.0);
                if m > best.1 + 1e-12 {
                    best = (child.clone(), m);
                    improved = true;
                }
                open.push((m, child));
            }
            if improved {
                stale = 0;
            } else {
                stale += 1;
            }
        }
        best
    }
}

/// CFS merit of the named inputs of `table`.
pub fn cfs_merit(table: &DataTable, names: &[&str]) -> Result<f64> {
    let eval = CfsEvaluator::new(table)?;
    let subset = names
        .iter()
        .map(|n| eval.names.iter().position(|m| m == n).ok_or_else(|| Error::UnknownAttribute((*n).into())))
        .collect::<Result<Vec<_>>>()?;
    eval.merit(&subset)
}

/// Names of the CFS-selected inputs, in table order.
pub fn select_best_attributes(table: &DataTable) -> Result<Vec<String>> {
    let eval = CfsEvaluator::new(table)?;
    let (subset, _) = eval.best_first();
    Ok(subset.into_iter().map(|a| eval.names[a].clone()).collect())
}

/// Keeps the id (if any), the named inputs and the class.
pub fn reduce_to(table: &DataTable, names: &[String]) -> Result<DataTable> {
    for n in names {
        let ok = table.attr_index(n).is_some_and(|c| table.specs()[c].role == Role::Input);
        if !ok {
            return Err(Error::UnknownAttribute(n.clone()));
        }
    }
    let cols: Vec<usize> = (0..table.n_cols())
        .filter(|&c| {
            let s = &table.specs()[c];
            s.role != Role::Input || names.contains(&s.name)
        })
        .collect();
    table.project(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::AttributeSpec;

    #[test]
    fn su_extremes() {
        let a = [0, 0, 1, 1];
        assert!((symmetric_uncertainty(&a, &a) - 1.0).abs() < 1e-12);
        assert_eq!(symmetric_uncertainty(&a, &[0, 1, 0, 1]), 0.0);
        assert_eq!(symmetric_uncertainty(&[0, 0], &[0, 0]), 0.0);
    }

    #[test]
    fn mdl_finds_clean_cut() {
        let values: Vec<Option<f64>> = (0..20).map(|i| Some(i as f64)).collect();
        let class: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let codes = discretize_numeric(&values, &class, 2);
        assert_eq!(codes, class);
    }

    #[test]
    fn merit_formula_cases() {
        let specs = vec![
            AttributeSpec::nominal("a", &["x", "y"]),
            AttributeSpec::nominal("b", &["x", "y"]),
            AttributeSpec::nominal("Class", &["P", "F"]).with_role(Role::Class),
        ];
        let rows = (0..8).map(|i| vec![Value::Nominal(i % 2), Value::Nominal(i % 2), Value::Nominal(i % 2)]).collect();
        let t = DataTable::new(specs, rows).unwrap();
        assert!((cfs_merit(&t, &["a"]).unwrap() - 1.0).abs() < 1e-12);
        assert!((cfs_merit(&t, &["a", "b"]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(cfs_merit(&t, &[]), Err(Error::EmptySubset)));
        assert_eq!(select_best_attributes(&t).unwrap(), vec![String::from("a")]);
        assert!(matches!(reduce_to(&t, &[String::from("zz")]), Err(Error::UnknownAttribute(_))));
        assert_eq!(reduce_to(&t, &[String::from("b")]).unwrap().n_cols(), 2);
    }
}
