//! Stratified k-fold cross-validation, accuracy, weighted one-vs-rest AUC
//! and the experiment grid over approaches, variants and algorithms.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ensemble::{self, Approach, FusionConfig};
use crate::error::{Error, Result};
use crate::learners::{Algorithm, LearnerParams};
use crate::math;
use crate::preprocess::{transform_variant, BinningConfig, Preprocessed, Variant};
use crate::rng;
use crate::table::{DataTable, Source};

/// Disjoint held-out folds over row positions `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Every row not held out in fold `f`, ascending.
    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        let mut rows: Vec<usize> =
            self.folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, r)| r.iter().copied()).collect();
        rows.sort_unstable();
        rows
    }

    pub fn n_rows(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }
}

/// Shuffles each class with the seeded generator and deals its rows to
/// folds round-robin. The dealing position carries over from one class
/// to the next, which keeps fold sizes within one of each other.
pub(crate) fn fold_plan(y: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParams("k must be >= 2".into()));
    }
    if k > y.len() {
        return Err(Error::TooFewRows(format!("{} rows for {k} folds", y.len())));
    }
    let mut rng = rng::seeded(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for c in 0..n_classes {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            folds[next % k].push(r);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { k, seed, folds })
}

/// Stratified folds over the rows of `table`. Every declared class must
/// have at least one instance.
pub fn stratified_kfold(table: &DataTable, k: usize, seed: u64) -> Result<FoldPlan> {
    let classes = table.class_column()?;
    let labels = table.class_labels().ok_or(Error::MissingClass)?;
    if classes.iter().any(Option::is_none) {
        return Err(Error::TooFewRows("rows with a missing class".into()));
    }
    let y: Vec<usize> = classes.into_iter().flatten().collect();
    for (c, l) in labels.iter().enumerate() {
        if !y.contains(&c) {
            return Err(Error::TooFewRows(format!("class {l} has no instances")));
        }
    }
    fold_plan(&y, labels.len(), k, seed)
}

/// Percentage of predictions equal to the truth.
pub fn accuracy(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: truth.len() });
    }
    if truth.is_empty() {
        return Err(Error::TooFewRows("no predictions".into()));
    }
    let correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * correct as f64 / truth.len() as f64)
}

/// Mann-Whitney AUC of `scores` for separating positives from negatives,
/// with midranks for ties. `None` when either group is empty.
pub fn auc_binary(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            if positive[o] {
                rank_sum += midrank;
            }
        }
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    /// Prevalence-weighted mean over classes with a defined AUC.
    pub weighted: f64,
    /// One-vs-rest AUC per class; `None` when the class is absent.
    pub per_class: Vec<Option<f64>>,
}

/// One-vs-rest AUC per class from class distributions, aggregated by
/// class prevalence.
pub fn auc_weighted(distributions: &[Vec<f64>], truth: &[usize], n_classes: usize) -> Result<AucReport> {
    if distributions.len() != truth.len() {
        return Err(Error::LengthMismatch { left: distributions.len(), right: truth.len() });
    }
    let mut per_class = Vec::with_capacity(n_classes);
    let mut total = 0.0;
    let mut weight = 0.0;
    for c in 0..n_classes {
        let scores: Vec<f64> = distributions.iter().map(|d| d.get(c).copied().unwrap_or(0.0)).collect();
        let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let auc = auc_binary(&scores, &positive);
        if let Some(a) = auc {
            let w = positive.iter().filter(|&&p| p).count() as f64;
            total += w * a;
            weight += w;
        }
        per_class.push(auc);
    }
    if weight == 0.0 {
        return Err(Error::SingleClassTruth);
    }
    Ok(AucReport { weighted: total / weight, per_class })
}

/// Rows are true classes, columns predicted classes.
pub fn confusion_matrix(predictions: &[usize], truth: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; n_classes]; n_classes];
    for (&p, &t) in predictions.iter().zip(truth) {
        m[t][p] += 1;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    /// Refit normalization/binning and feature selection on each
    /// training fold instead of once on all rows.
    pub fold_local_refit: bool,
    /// Report the mean of per-fold accuracies instead of pooling.
    pub mean_of_folds: bool,
    pub binning: BinningConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { k: 10, seed: 1, fold_local_refit: false, mean_of_folds: false, binning: BinningConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub algorithm: Algorithm,
    pub accuracy: f64,
    pub auc: f64,
    pub per_class_auc: Vec<Option<f64>>,
    pub confusion: Vec<Vec<usize>>,
    pub fold_accuracies: Vec<f64>,
}

/// Seed for the models of one grid cell and fold.
pub fn cell_seed(seed: u64, approach: Approach, variant: Variant, algorithm: Algorithm, fold: usize) -> u64 {
    rng::derive(seed, &[rng::tag(approach.tag()), rng::tag(variant.name()), rng::tag(algorithm.tag()), fold as u64])
}

/// k-fold cross-validation of one approach, variant and algorithm.
///
/// The fold plan depends only on `cv.seed`, so every cell of a grid is
/// scored on the same folds.
pub fn cross_validate(
    pre: &Preprocessed,
    variant: Variant,
    fusion: &FusionConfig,
    algorithm: Algorithm,
    params: &LearnerParams,
    cv: &CvConfig,
) -> Result<CvResult> {
    let bundle = pre.variant(variant);
    let full = ensemble::prepare(fusion.approach, bundle, None)?;
    fusion.validate(&full.sources())?;
    let classes = full.class_column()?;
    let known: Vec<usize> = (0..classes.len()).filter(|&r| classes[r].is_some()).collect();
    let y: Vec<usize> = known.iter().map(|&r| classes[r].unwrap_or(0)).collect();
    let n_classes = bundle.get(Source::Exam).and_then(DataTable::class_labels).map_or(0, <[String]>::len);
    let plan = fold_plan(&y, n_classes, cv.k, cv.seed)?;

    let mut predictions = Vec::new();
    let mut truth = Vec::new();
    let mut distributions = Vec::new();
    let mut fold_accuracies = Vec::new();
    for (f, test) in plan.folds.iter().enumerate() {
        let train_rows: Vec<usize> = plan.train_rows(f).iter().map(|&i| known[i]).collect();
        let test_rows: Vec<usize> = test.iter().map(|&i| known[i]).collect();
        let local;
        let datasets = if cv.fold_local_refit {
            let (refit, _) = transform_variant(&pre.fused, variant, &cv.binning, Some(&train_rows))?;
            local = ensemble::prepare(fusion.approach, &refit, Some(&train_rows))?;
            &local
        } else {
            &full
        };
        let seed = cell_seed(cv.seed, fusion.approach, variant, algorithm, f);
        let model = ensemble::fit(datasets, Some(&train_rows), &fusion.weights, algorithm, params, seed)?;
        let dists = ensemble::predict(&model, datasets, &test_rows)?;
        let fold_pred: Vec<usize> = dists.iter().map(|d| math::argmax(d)).collect();
        let fold_truth: Vec<usize> = test.iter().map(|&i| y[i]).collect();
        fold_accuracies.push(accuracy(&fold_pred, &fold_truth)?);
        predictions.extend(fold_pred);
        truth.extend(fold_truth);
        distributions.extend(dists);
    }
    let acc = if cv.mean_of_folds {
        fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64
    } else {
        accuracy(&predictions, &truth)?
    };
    let auc = auc_weighted(&distributions, &truth, n_classes)?;
    Ok(CvResult {
        algorithm,
        accuracy: acc,
        auc: auc.weighted,
        per_class_auc: auc.per_class,
        confusion: confusion_matrix(&predictions, &truth, n_classes),
        fold_accuracies,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub approaches: Vec<Approach>,
    pub variants: Vec<Variant>,
    pub algorithms: Vec<Algorithm>,
    pub weights: BTreeMap<Source, f64>,
    /// Choose ensemble weights from this grid by cross-validation.
    pub weight_grid: Option<Vec<f64>>,
    pub params: LearnerParams,
    pub cv: CvConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            approaches: Approach::ALL.to_vec(),
            variants: vec![Variant::Numeric, Variant::Discretized],
            algorithms: Algorithm::ALL.to_vec(),
            weights: ensemble::default_weights(),
            weight_grid: None,
            params: LearnerParams::default(),
            cv: CvConfig::default(),
        }
    }
}

/// One table of the grid: all algorithms for one approach and variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub approach: Approach,
    pub variant: Variant,
    pub seed: u64,
    pub rows: Vec<CvResult>,
    /// Vote weights used by ensemble approaches, per algorithm.
    pub weights: BTreeMap<Algorithm, BTreeMap<Source, f64>>,
}

impl EvaluationReport {
    /// Mean accuracy and AUC over the rows.
    pub fn averages(&self) -> (f64, f64) {
        let n = self.rows.len().max(1) as f64;
        (self.rows.iter().map(|r| r.accuracy).sum::<f64>() / n, self.rows.iter().map(|r| r.auc).sum::<f64>() / n)
    }

    pub fn title(&self) -> String {
        format!("{} ({} data)", self.approach.title(), self.variant.name())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title());
        let _ = writeln!(out, "{:<12}{:>12}{:>10}", "Algorithm", "% Accuracy", "AUC");
        for r in &self.rows {
            let _ = writeln!(out, "{:<12}{:>12.4}{:>10.4}", r.algorithm.title(), r.accuracy, r.auc);
        }
        let (a, u) = self.averages();
        let _ = writeln!(out, "{:<12}{:>12.4}{:>10.4}", "Avg.", a, u);
        for (alg, w) in &self.weights {
            let ws: Vec<String> = w.iter().map(|(s, v)| format!("{}={}", s.title(), v)).collect();
            let _ = writeln!(out, "weights {}: {}", alg.title(), ws.join(", "));
        }
        out
    }
}

/// One (approach, variant, algorithm) combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub approach: Approach,
    pub variant: Variant,
    pub algorithm: Algorithm,
}

/// Cells in report order: approaches, then variants, then algorithms.
pub fn grid_cells(config: &GridConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &approach in &config.approaches {
        for &variant in &config.variants {
            for &algorithm in &config.algorithms {
                cells.push(Cell { approach, variant, algorithm });
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub result: CvResult,
    pub weights: Option<BTreeMap<Source, f64>>,
}

/// Evaluates one cell; independent of every other cell.
pub fn evaluate_cell(pre: &Preprocessed, config: &GridConfig, cell: Cell) -> Result<CellResult> {
    let mut fusion = FusionConfig { approach: cell.approach, weights: config.weights.clone() };
    let mut weights = None;
    if cell.approach.is_ensemble() {
        if let Some(grid) = &config.weight_grid {
            let datasets = ensemble::prepare(cell.approach, pre.variant(cell.variant), None)?;
            let found =
                ensemble::weight_search(&datasets, cell.algorithm, &config.params, grid, config.cv.k, config.cv.seed)?;
            fusion.weights = found.weights;
        }
        weights = Some(fusion.weights.clone());
    }
    let result = cross_validate(pre, cell.variant, &fusion, cell.algorithm, &config.params, &config.cv)?;
    Ok(CellResult { result, weights })
}

/// All tables of a grid run plus the averages summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub tables: Vec<EvaluationReport>,
}

impl GridReport {
    /// Groups cell results (in `grid_cells` order) into tables.
    pub fn assemble(config: &GridConfig, results: Vec<CellResult>) -> GridReport {
        let mut tables: Vec<EvaluationReport> = Vec::new();
        for (cell, r) in grid_cells(config).into_iter().zip(results) {
            let fresh = tables.last().is_none_or(|t| t.approach != cell.approach || t.variant != cell.variant);
            if fresh {
                tables.push(EvaluationReport {
                    approach: cell.approach,
                    variant: cell.variant,
                    seed: config.cv.seed,
                    rows: Vec::new(),
                    weights: BTreeMap::new(),
                });
            }
            let table = tables.last_mut().expect("pushed above");
            if let Some(w) = r.weights {
                table.weights.insert(cell.algorithm, w);
            }
            table.rows.push(r.result);
        }
        GridReport { tables }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("approach,variant,algorithm,accuracy_pct,auc\n");
        for t in &self.tables {
            for r in &t.rows {
                let _ =
                    writeln!(out, "{},{},{},{:.4},{:.4}", t.approach, t.variant.name(), r.algorithm, r.accuracy, r.auc);
            }
            let (a, u) = t.averages();
            let _ = writeln!(out, "{},{},avg,{:.4},{:.4}", t.approach, t.variant.name(), a, u);
        }
        out
    }

    /// Average accuracy and AUC per approach and variant.
    pub fn summary_text(&self) -> String {
        let mut out = String::from("Average results per approach\n");
        let _ = writeln!(out, "{:<52}{:<13}{:>12}{:>10}", "Approach", "Variant", "% Accuracy", "AUC");
        for t in &self.tables {
            let (a, u) = t.averages();
            let _ = writeln!(out, "{:<52}{:<13}{:>12.4}{:>10.4}", t.approach.title(), t.variant.name(), a, u);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tables {
            out.push_str(&t.to_text());
            out.push('\n');
        }
        out.push_str(&self.summary_text());
        out
    }

    /// The cell with the highest accuracy, ties broken by AUC and then by
    /// report order.
    pub fn best(&self) -> Option<(&EvaluationReport, &CvResult)> {
        let mut best: Option<(&EvaluationReport, &CvResult)> = None;
        for t in &self.tables {
            for r in &t.rows {
                let better =
                    best.is_none_or(|(_, b)| r.accuracy > b.accuracy || (r.accuracy == b.accuracy && r.auc > b.auc));
                if better {
                    best = Some((t, r));
                }
            }
        }
        best
    }
}

/// Runs every cell sequentially.
pub fn run_experiment_grid(pre: &Preprocessed, config: &GridConfig) -> Result<GridReport> {
    let results =
        grid_cells(config).into_iter().map(|cell| evaluate_cell(pre, config, cell)).collect::<Result<Vec<_>>>()?;
    Ok(GridReport::assemble(config, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_reference() {
        let truth = vec![0; 57];
        let mut pred = vec![0; 46];
        pred.extend([1; 11]);
        assert_eq!(format!("{:.4}", accuracy(&pred, &truth).unwrap()), "80.7018");
        assert!(matches!(accuracy(&[0], &[0, 1]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn auc_edges() {
        assert_eq!(auc_binary(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]), Some(1.0));
        assert_eq!(auc_binary(&[0.5; 4], &[false, true, false, true]), Some(0.5));
        assert_eq!(auc_binary(&[0.5; 2], &[true, true]), None);
        assert!(matches!(auc_weighted(&[vec![1.0, 0.0]], &[0], 2), Err(Error::SingleClassTruth)));
    }

    #[test]
    fn folds_for_cohort_class_sizes() {
        let mut y = vec![0; 19];
        y.extend([1; 17]);
        y.extend([2; 21]);
        let plan = fold_plan(&y, 3, 10, 7).unwrap();
        assert_eq!(plan.n_rows(), 57);
        for f in &plan.folds {
            assert!((5..=6).contains(&f.len()));
        }
        assert!(fold_plan(&y, 3, 58, 7).is_err());
    }
}
