//! The four data-fusion approaches and the weighted Vote combiner.
//!
//! `MergeAll` joins every source into one table, `SelectBest` adds CFS
//! reduction on top. `Ensemble` trains one model per source (each with
//! the class column attached) and averages their distributions with
//! per-source weights; `EnsembleSelect` reduces each source first.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::learners::{self, Algorithm, LearnerParams, Model};
use crate::math;
use crate::rng;
use crate::select;
use crate::table::{join_on_id, DataTable, Source, SourceBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    MergeAll,
    SelectBest,
    Ensemble,
    EnsembleSelect,
}

impl Approach {
    pub const ALL: [Approach; 4] =
        [Approach::MergeAll, Approach::SelectBest, Approach::Ensemble, Approach::EnsembleSelect];

    pub fn tag(self) -> &'static str {
        match self {
            Approach::MergeAll => "merge",
            Approach::SelectBest => "select",
            Approach::Ensemble => "ensemble",
            Approach::EnsembleSelect => "ensemble-select",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Approach::MergeAll => "Merging all attributes",
            Approach::SelectBest => "Selecting the best attributes",
            Approach::Ensemble => "Using ensembles",
            Approach::EnsembleSelect => "Using ensembles with selecting the best attributes",
        }
    }

    pub fn parse(s: &str) -> Option<Approach> {
        Approach::ALL.into_iter().find(|a| a.tag().eq_ignore_ascii_case(s.trim()))
    }

    pub fn is_ensemble(self) -> bool {
        matches!(self, Approach::Ensemble | Approach::EnsembleSelect)
    }

    pub fn selects(self) -> bool {
        matches!(self, Approach::SelectBest | Approach::EnsembleSelect)
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Theory 1, Practice 1, Online 2.
pub fn default_weights() -> BTreeMap<Source, f64> {
    BTreeMap::from([(Source::Theory, 1.0), (Source::Practice, 1.0), (Source::Online, 2.0)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub approach: Approach,
    /// Vote weight per input source; ignored by the merging approaches.
    pub weights: BTreeMap<Source, f64>,
}

impl FusionConfig {
    pub fn new(approach: Approach) -> FusionConfig {
        FusionConfig { approach, weights: default_weights() }
    }

    /// Weights must be positive and cover exactly `sources`.
    pub fn validate(&self, sources: &[Source]) -> Result<()> {
        if !self.approach.is_ensemble() {
            return Ok(());
        }
        let keys: Vec<Source> = self.weights.keys().copied().collect();
        if keys != sources {
            return Err(Error::InvalidParams(format!("weights cover {keys:?}, sources are {sources:?}")));
        }
        if let Some((s, w)) = self.weights.iter().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParams(format!("weight for {s} must be positive, got {w}")));
        }
        Ok(())
    }
}

/// Average-of-probabilities combination: sum(w * p) / sum(w).
pub fn vote_predict(parts: &[(f64, &[f64])]) -> Result<Vec<f64>> {
    let Some((_, first)) = parts.first() else {
        return Err(Error::InvalidParams("vote needs at least one member".into()));
    };
    let k = first.len();
    let mut out = vec![0.0; k];
    let mut total = 0.0;
    for (w, p) in parts {
        if p.len() != k {
            return Err(Error::SchemaMismatch(format!("distribution of length {} among length {k}", p.len())));
        }
        for (o, v) in out.iter_mut().zip(p.iter()) {
            *o += w * v;
        }
        total += w;
    }
    for o in &mut out {
        *o /= total;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteMember {
    pub source: Source,
    pub weight: f64,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteModel {
    pub members: Vec<VoteMember>,
}

impl VoteModel {
    /// Combined distribution given each member's instance in member order.
    pub fn predict_parts(&self, parts: &[Vec<crate::table::Value>]) -> Result<Vec<f64>> {
        if parts.len() != self.members.len() {
            return Err(Error::SchemaMismatch(format!("expected {} parts, got {}", self.members.len(), parts.len())));
        }
        let dists = self.members.iter().zip(parts).map(|(m, x)| m.model.predict(x)).collect::<Result<Vec<_>>>()?;
        let weighted: Vec<(f64, &[f64])> =
            self.members.iter().zip(&dists).map(|(m, d)| (m.weight, d.as_slice())).collect();
        vote_predict(&weighted)
    }

    /// Predicts every row of a table holding the columns of all members.
    pub fn predict_table(&self, table: &DataTable) -> Result<Vec<Vec<f64>>> {
        let per_member = self.members.iter().map(|m| m.model.predict_table(table)).collect::<Result<Vec<_>>>()?;
        (0..table.n_rows())
            .map(|r| {
                let weighted: Vec<(f64, &[f64])> =
                    self.members.iter().zip(&per_member).map(|(m, d)| (m.weight, d[r].as_slice())).collect();
                vote_predict(&weighted)
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.members {
            let name = m.model.algorithm.map_or("Rule", |a| a.title()).to_uppercase();
            out.push_str(&format!("{name} rules ({}):\n=====\n", m.source.title()));
            out.push_str(&m.model.render());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FusionModel {
    Single(Model),
    Vote(VoteModel),
}

impl FusionModel {
    pub fn predict_table(&self, table: &DataTable) -> Result<Vec<Vec<f64>>> {
        match self {
            FusionModel::Single(m) => m.predict_table(table),
            FusionModel::Vote(v) => v.predict_table(table),
        }
    }

    pub fn render(&self) -> String {
        match self {
            FusionModel::Single(m) => m.render(),
            FusionModel::Vote(v) => v.render(),
        }
    }

    pub fn class_labels(&self) -> &[String] {
        match self {
            FusionModel::Single(m) => m.class_labels(),
            FusionModel::Vote(v) => v.members.first().map_or(&[], |m| m.model.class_labels()),
        }
    }
}

/// The training data an approach works on. Rows are aligned by student
/// across all tables.
#[derive(Debug, Clone, PartialEq)]
pub enum Datasets {
    Single(DataTable),
    PerSource(Vec<(Source, DataTable)>),
}

impl Datasets {
    pub fn n_rows(&self) -> usize {
        match self {
            Datasets::Single(t) => t.n_rows(),
            Datasets::PerSource(v) => v.first().map_or(0, |(_, t)| t.n_rows()),
        }
    }

    /// Class column of the (first) table.
    pub fn class_column(&self) -> Result<Vec<Option<usize>>> {
        match self {
            Datasets::Single(t) => t.class_column(),
            Datasets::PerSource(v) => v.first().ok_or(Error::EmptySubset)?.1.class_column(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Datasets {
        match self {
            Datasets::Single(t) => Datasets::Single(t.select_rows(rows)),
            Datasets::PerSource(v) => Datasets::PerSource(v.iter().map(|(s, t)| (*s, t.select_rows(rows))).collect()),
        }
    }

    pub fn sources(&self) -> Vec<Source> {
        match self {
            Datasets::Single(_) => Vec::new(),
            Datasets::PerSource(v) => v.iter().map(|(s, _)| *s).collect(),
        }
    }
}

/// Input sources of a variant bundle, excluding the exam.
pub fn input_sources(bundle: &SourceBundle) -> Vec<Source> {
    bundle.sources().into_iter().filter(|s| *s != Source::Exam).collect()
}

/// One source's inputs plus the class, without the id.
pub fn source_dataset(bundle: &SourceBundle, source: Source) -> Result<DataTable> {
    let table = bundle.get(source).ok_or_else(|| Error::InvalidSchema(format!("bundle lacks {source} table")))?;
    let exam = bundle.get(Source::Exam).ok_or(Error::MissingClass)?;
    join_on_id(&SourceBundle::from_tables([(source, table.clone()), (Source::Exam, exam.clone())]), true)
}

/// CFS on `table` restricted to `rows`, then projection of the full table.
fn select_on(table: &DataTable, rows: Option<&[usize]>) -> Result<DataTable> {
    let names = match rows {
        Some(r) => select::select_best_attributes(&table.select_rows(r))?,
        None => select::select_best_attributes(table)?,
    };
    select::reduce_to(table, &names)
}

/// Builds the datasets `approach` trains on. Feature selection is fitted
/// on `fit_rows` (all rows when `None`).
pub fn prepare(approach: Approach, bundle: &SourceBundle, fit_rows: Option<&[usize]>) -> Result<Datasets> {
    match approach {
        Approach::MergeAll => Ok(Datasets::Single(join_on_id(bundle, true)?)),
        Approach::SelectBest => Ok(Datasets::Single(select_on(&join_on_id(bundle, true)?, fit_rows)?)),
        Approach::Ensemble | Approach::EnsembleSelect => {
            let mut out = Vec::new();
            for s in input_sources(bundle) {
                let t = source_dataset(bundle, s)?;
                let t = if approach.selects() { select_on(&t, fit_rows)? } else { t };
                out.push((s, t));
            }
            Ok(Datasets::PerSource(out))
        }
    }
}

/// Seed of the base model for `source` within one training run.
pub fn member_seed(seed: u64, source: Source) -> u64 {
    rng::derive(seed, &[rng::tag(source.name())])
}

/// Trains on the given rows of prepared datasets.
pub fn fit(
    datasets: &Datasets,
    rows: Option<&[usize]>,
    weights: &BTreeMap<Source, f64>,
    algorithm: Algorithm,
    params: &LearnerParams,
    seed: u64,
) -> Result<FusionModel> {
    let pick = |t: &DataTable| match rows {
        Some(r) => t.select_rows(r),
        None => t.clone(),
    };
    match datasets {
        Datasets::Single(t) => Ok(FusionModel::Single(learners::train(algorithm, &pick(t), params, seed)?)),
        Datasets::PerSource(v) => {
            let mut members = Vec::new();
            for (source, t) in v {
                let weight = *weights
                    .get(source)
                    .ok_or_else(|| Error::InvalidParams(format!("no weight for source {source}")))?;
                let model = learners::train(algorithm, &pick(t), params, member_seed(seed, *source))?;
                members.push(VoteMember { source: *source, weight, model });
            }
            Ok(FusionModel::Vote(VoteModel { members }))
        }
    }
}

/// Distributions for the given rows of prepared datasets.
pub fn predict(model: &FusionModel, datasets: &Datasets, rows: &[usize]) -> Result<Vec<Vec<f64>>> {
    match (model, datasets) {
        (FusionModel::Single(m), Datasets::Single(t)) => m.predict_table(&t.select_rows(rows)),
        (FusionModel::Vote(v), Datasets::PerSource(tables)) => {
            let mut per_member = Vec::new();
            for m in &v.members {
                let (_, t) = tables
                    .iter()
                    .find(|(s, _)| *s == m.source)
                    .ok_or_else(|| Error::SchemaMismatch(format!("no data for source {}", m.source)))?;
                per_member.push(m.model.predict_table(&t.select_rows(rows))?);
            }
            (0..rows.len())
                .map(|r| {
                    let weighted: Vec<(f64, &[f64])> =
                        v.members.iter().zip(&per_member).map(|(m, d)| (m.weight, d[r].as_slice())).collect();
                    vote_predict(&weighted)
                })
                .collect()
        }
        _ => Err(Error::SchemaMismatch("model and datasets belong to different approaches".into())),
    }
}

/// Prepares the approach's datasets on the whole bundle and trains on them.
pub fn run_approach(
    config: &FusionConfig,
    bundle: &SourceBundle,
    algorithm: Algorithm,
    params: &LearnerParams,
    seed: u64,
) -> Result<(FusionModel, Datasets)> {
    let datasets = prepare(config.approach, bundle, None)?;
    config.validate(&datasets.sources())?;
    let model = fit(&datasets, None, &config.weights, algorithm, params, seed)?;
    Ok((model, datasets))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSearch {
    pub weights: BTreeMap<Source, f64>,
    /// Cross-validated accuracy in percent of the chosen weights.
    pub accuracy: f64,
    /// Every evaluated assignment with its accuracy, in evaluation order.
    pub evaluated: Vec<(Vec<f64>, f64)>,
}

/// All assignments of `grid` values to `n` sources: the all-ones vector
/// first (when the grid holds 1), then lexicographic order.
pub fn weight_grid(grid: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                grid.iter().map(move |&g| {
                    let mut p = prefix.clone();
                    p.push(g);
                    p
                })
            })
            .collect();
    }
    if let Some(pos) = out.iter().position(|w| w.iter().all(|&x| x == 1.0)) {
        let ones = out.remove(pos);
        out.insert(0, ones);
    }
    out
}

/// Picks per-source Vote weights from `grid` by cross-validated accuracy.
///
/// Base models are trained once per fold and source; every weight vector
/// is scored on the same held-out distributions. Ties keep the earlier
/// vector in `weight_grid` order.
pub fn weight_search(
    datasets: &Datasets,
    algorithm: Algorithm,
    params: &LearnerParams,
    grid: &[f64],
    k: usize,
    seed: u64,
) -> Result<WeightSearch> {
    let Datasets::PerSource(tables) = datasets else {
        return Err(Error::InvalidParams("weight search needs per-source datasets".into()));
    };
    if tables.len() < 2 {
        return Err(Error::InvalidParams("weight search needs at least two sources".into()));
    }
    if grid.is_empty() || grid.iter().any(|&g| g.is_nan() || g <= 0.0) {
        return Err(Error::InvalidParams("weight grid must hold positive values".into()));
    }
    let classes = datasets.class_column()?;
    let known: Vec<usize> = (0..classes.len()).filter(|&r| classes[r].is_some()).collect();
    let y: Vec<usize> = known.iter().map(|&r| classes[r].unwrap_or(0)).collect();
    let n_classes = tables[0].1.class_labels().map_or(0, <[String]>::len);
    let plan = eval::fold_plan(&y, n_classes, k, seed)?;

    // held[f][s][i]: distribution of source s for the i-th held-out row of fold f.
    let mut held: Vec<Vec<Vec<Vec<f64>>>> = Vec::new();
    let mut truth: Vec<usize> = Vec::new();
    for (f, test) in plan.folds.iter().enumerate() {
        let train_rows: Vec<usize> = plan.train_rows(f).iter().map(|&i| known[i]).collect();
        let test_rows: Vec<usize> = test.iter().map(|&i| known[i]).collect();
        let fold_seed = rng::derive(seed, &[rng::tag(algorithm.tag()), f as u64]);
        let mut per_source = Vec::new();
        for (source, t) in tables {
            let model =
                learners::train(algorithm, &t.select_rows(&train_rows), params, member_seed(fold_seed, *source))?;
            per_source.push(model.predict_table(&t.select_rows(&test_rows))?);
        }
        held.push(per_source);
        truth.extend(test.iter().map(|&i| y[i]));
    }

    let mut best: Option<(Vec<f64>, usize)> = None;
    let mut evaluated = Vec::new();
    for w in weight_grid(grid, tables.len()) {
        let mut correct = 0;
        let mut t = 0;
        for fold in &held {
            for i in 0..fold[0].len() {
                let parts: Vec<(f64, &[f64])> = w.iter().zip(fold).map(|(&wi, d)| (wi, d[i].as_slice())).collect();
                if math::argmax(&vote_predict(&parts)?) == truth[t] {
                    correct += 1;
                }
                t += 1;
            }
        }
        evaluated.push((w.clone(), 100.0 * correct as f64 / truth.len().max(1) as f64));
        if best.as_ref().is_none_or(|(_, c)| correct > *c) {
            best = Some((w, correct));
        }
    }
    let (w, correct) = best.expect("grid is not empty");
    Ok(WeightSearch {
        weights: tables.iter().map(|(s, _)| *s).zip(w).collect(),
        accuracy: 100.0 * correct as f64 / truth.len().max(1) as f64,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_vote() {
        let out = vote_predict(&[(1.0, &[0.6, 0.3, 0.1]), (1.0, &[0.3, 0.4, 0.3]), (2.0, &[0.2, 0.2, 0.6])]).unwrap();
        let expect = [0.325, 0.275, 0.4];
        for (o, e) in out.iter().zip(expect) {
            assert!((o - e).abs() < 1e-15);
        }
        assert_eq!(math::argmax(&out), 2);
    }

    #[test]
    fn grid_order() {
        let g = weight_grid(&[1.0, 2.0], 3);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], vec![1.0, 1.0, 1.0]);
        assert_eq!(g[1], vec![1.0, 1.0, 2.0]);
        assert_eq!(g[7], vec![2.0, 2.0, 2.0]);
        assert_eq!(weight_grid(&[1.0], 3), vec![vec![1.0; 3]]);
    }

    #[test]
    fn weights_must_cover_sources() {
        let c = FusionConfig::new(Approach::Ensemble);
        assert!(c.validate(&[Source::Theory, Source::Practice, Source::Online]).is_ok());
        assert!(c.validate(&[Source::Theory]).is_err());
        let mut bad = c.clone();
        bad.weights.insert(Source::Theory, 0.0);
        assert!(bad.validate(&[Source::Theory, Source::Practice, Source::Online]).is_err());
    }
}
