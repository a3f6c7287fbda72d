//! Anonymization, min-max normalization, equal-width discretization,
//! class labelling from exam scores and per-session fusion.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::rng;
use crate::table::{AttrKind, AttributeSpec, DataTable, Role, Source, SourceBundle, Value};

pub const CLASS_NAME: &str = "Class";
pub const CLASS_LABELS: [&str; 3] = ["Pass", "Fail", "Dropout"];
pub const BIN_LABELS: [&str; 3] = ["Low", "Medium", "High"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: f64,
    pub max: f64,
}

impl NormalizationParams {
    pub fn fit(column: &[Option<f64>]) -> Result<Self> {
        let (min, max) = min_max(column)?;
        Ok(NormalizationParams { min, max })
    }

    /// `(x - min) / (max - min)`; a constant column maps to 0.
    pub fn apply(&self, x: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            (x - self.min) / span
        } else {
            0.0
        }
    }
}

fn min_max(column: &[Option<f64>]) -> Result<(f64, f64)> {
    let mut it = column.iter().flatten();
    let first = *it.next().ok_or(Error::EmptyColumn)?;
    Ok(it.fold((first, first), |(lo, hi), &x| (lo.min(x), hi.max(x))))
}

pub fn min_max_normalize(column: &[Option<f64>]) -> Result<(Vec<Option<f64>>, NormalizationParams)> {
    let params = NormalizationParams::fit(column)?;
    Ok((column.iter().map(|x| x.map(|x| params.apply(x))).collect(), params))
}

/// Number of bins and their labels, lowest bin first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    pub n_bins: usize,
    pub labels: Vec<String>,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig { n_bins: 3, labels: BIN_LABELS.iter().map(|s| String::from(*s)).collect() }
    }
}

impl BinningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 {
            return Err(Error::InvalidParams(format!("n_bins must be >= 2, got {}", self.n_bins)));
        }
        if self.labels.len() != self.n_bins {
            return Err(Error::InvalidParams(format!("{} bin labels for {} bins", self.labels.len(), self.n_bins)));
        }
        Ok(())
    }
}

/// Fitted equal-width bins for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningParams {
    pub n_bins: usize,
    pub labels: Vec<String>,
    pub min: f64,
    pub max: f64,
}

impl BinningParams {
    pub fn fit(column: &[Option<f64>], config: &BinningConfig) -> Result<Self> {
        config.validate()?;
        let (min, max) = min_max(column)?;
        Ok(BinningParams { n_bins: config.n_bins, labels: config.labels.clone(), min, max })
    }

    pub fn width(&self) -> f64 {
        (self.max - self.min) / self.n_bins as f64
    }

    /// Lower edge of bin `i`: `min + i * width`.
    pub fn boundary(&self, i: usize) -> f64 {
        self.min + i as f64 * self.width()
    }

    /// Half-open bins `[b_i, b_{i+1})`; the top bin also takes `max` and
    /// anything above it, the bottom bin anything below `min`.
    pub fn bin(&self, x: f64) -> usize {
        let width = self.width();
        if width <= 0.0 {
            return 0;
        }
        let top = self.n_bins - 1;
        let raw = math::floor((x - self.min) / width);
        let mut i = if raw < 0.0 { 0 } else { (raw as usize).min(top) };
        // Snap to the exact boundaries so the partition agrees with `boundary`.
        while i < top && x >= self.boundary(i + 1) {
            i += 1;
        }
        while i > 0 && x < self.boundary(i) {
            i -= 1;
        }
        i
    }

    pub fn spec(&self, name: &str) -> AttributeSpec {
        AttributeSpec { name: name.into(), kind: AttrKind::Nominal(self.labels.clone()), role: Role::Input }
    }
}

/// Discretizes a column into equal-width bins fitted on the column itself.
pub fn equal_width_discretize(
    column: &[Option<f64>],
    config: &BinningConfig,
) -> Result<(Vec<Option<usize>>, BinningParams)> {
    let params = BinningParams::fit(column, config)?;
    Ok((column.iter().map(|x| x.map(|x| params.bin(x))).collect(), params))
}

/// Clamps values to the given lower/upper percentiles (nearest-rank).
pub fn winsorize(column: &[Option<f64>], lower_pct: f64, upper_pct: f64) -> Result<Vec<Option<f64>>> {
    if !(0.0..=100.0).contains(&lower_pct) || !(0.0..=100.0).contains(&upper_pct) || lower_pct > upper_pct {
        return Err(Error::InvalidParams("percentiles must satisfy 0 <= lower <= upper <= 100".into()));
    }
    let mut sorted: Vec<f64> = column.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return Err(Error::EmptyColumn);
    }
    sorted.sort_by(f64::total_cmp);
    let rank = |p: f64| {
        let r = math::ceil(p / 100.0 * sorted.len() as f64) as usize;
        sorted[r.clamp(1, sorted.len()) - 1]
    };
    let (lo, hi) = (rank(lower_pct), rank(upper_pct));
    Ok(column.iter().map(|x| x.map(|x| x.clamp(lo, hi))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
    Dropout,
}

impl Status {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        CLASS_LABELS[self.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRule {
    pub pass_threshold: f64,
}

impl Default for ClassRule {
    fn default() -> Self {
        ClassRule { pass_threshold: 5.0 }
    }
}

/// Absent score is a dropout; otherwise pass at or above the threshold.
pub fn label_class(exam_score: Option<f64>, rule: &ClassRule) -> Result<Status> {
    if !(0.0..=10.0).contains(&rule.pass_threshold) {
        return Err(Error::InvalidParams(format!("pass threshold {} outside [0, 10]", rule.pass_threshold)));
    }
    match exam_score {
        None => Ok(Status::Dropout),
        Some(s) if !(0.0..=10.0).contains(&s) => Err(Error::OutOfRangeScore(s)),
        Some(s) if s >= rule.pass_threshold => Ok(Status::Pass),
        Some(_) => Ok(Status::Fail),
    }
}

pub fn class_spec() -> AttributeSpec {
    AttributeSpec::nominal(CLASS_NAME, &CLASS_LABELS).with_role(Role::Class)
}

/// Splits `Base.s<k>` into `(Base, k)`.
pub fn session_base(name: &str) -> Option<(&str, usize)> {
    let (base, suffix) = name.rsplit_once(".s")?;
    if base.is_empty() || suffix.is_empty() || !suffix.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((base, suffix.parse().ok()?))
}

/// Arithmetic mean of the non-missing values.
pub fn fuse_mean(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>() / present.len() as f64)
    }
}

/// Most frequent label; ties go to the smallest label index.
pub fn fuse_mode(values: &[Option<usize>], n_labels: usize) -> Option<usize> {
    let mut counts = vec![0usize; n_labels];
    for v in values.iter().flatten() {
        counts[*v] += 1;
    }
    let mut best: Option<usize> = None;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 && best.is_none_or(|b| c > counts[b]) {
            best = Some(i);
        }
    }
    best
}

/// Collapses every `Base.s<k>` column group into one `Base` column (mean
/// for numeric groups, mode for nominal). Other columns pass through. The
/// fused column takes the position of the group's first member.
pub fn fuse_sessions(table: &DataTable) -> Result<DataTable> {
    enum Slot {
        Plain(usize),
        Group(String, Vec<usize>),
    }
    let mut slots: Vec<Slot> = Vec::new();
    let mut group_pos: BTreeMap<String, usize> = BTreeMap::new();
    for (c, spec) in table.specs().iter().enumerate() {
        match session_base(&spec.name) {
            Some((base, _)) if spec.role == Role::Input => {
                if let Some(&p) = group_pos.get(base) {
                    if let Slot::Group(_, members) = &mut slots[p] {
                        members.push(c);
                    }
                } else {
                    group_pos.insert(base.to_string(), slots.len());
                    slots.push(Slot::Group(base.to_string(), vec![c]));
                }
            }
            _ => slots.push(Slot::Plain(c)),
        }
    }

    let specs = table.specs();
    let mut out_specs = Vec::with_capacity(slots.len());
    let mut columns: Vec<Vec<Value>> = Vec::with_capacity(slots.len());
    for slot in &slots {
        match slot {
            Slot::Plain(c) => {
                out_specs.push(specs[*c].clone());
                columns.push(table.column(*c).cloned().collect());
            }
            Slot::Group(base, members) => {
                let kind = &specs[members[0]].kind;
                if members.iter().any(|&m| &specs[m].kind != kind) {
                    return Err(Error::MixedKindGroup(base.clone()));
                }
                let fused: Vec<Value> = table
                    .rows()
                    .iter()
                    .map(|row| match kind {
                        AttrKind::Numeric => {
                            let vals: Vec<Option<f64>> = members.iter().map(|&m| row[m].as_f64()).collect();
                            fuse_mean(&vals).map_or(Value::Missing, Value::Numeric)
                        }
                        AttrKind::Nominal(labels) => {
                            let vals: Vec<Option<usize>> = members.iter().map(|&m| row[m].as_index()).collect();
                            fuse_mode(&vals, labels.len()).map_or(Value::Missing, Value::Nominal)
                        }
                        AttrKind::Text => Value::Missing,
                    })
                    .collect();
                out_specs.push(AttributeSpec { name: base.clone(), kind: kind.clone(), role: Role::Input });
                columns.push(fused);
            }
        }
    }
    let rows = (0..table.n_rows()).map(|r| columns.iter().map(|col| col[r].clone()).collect()).collect();
    DataTable::new(out_specs, rows)
}

/// Anonymization result: the same students under fresh numeric ids.
#[derive(Debug, Clone, PartialEq)]
pub struct IdMapping {
    /// `(original, anonymized)` pairs sorted by original id.
    pub pairs: Vec<(String, String)>,
}

/// Replaces every id by a distinct pseudorandom 6-digit number, the same
/// one in every table of the bundle.
pub fn anonymize(bundle: &SourceBundle, seed: u64) -> Result<(SourceBundle, IdMapping)> {
    bundle.validate_ids()?;
    let Some((_, first)) = bundle.iter().next() else {
        return Ok((bundle.clone(), IdMapping { pairs: Vec::new() }));
    };
    let mut originals: Vec<String> = first.ids().into_iter().map(String::from).collect();
    originals.sort();
    if originals.len() > 900_000 {
        return Err(Error::InvalidParams("too many students for 6-digit ids".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut used = alloc::collections::BTreeSet::new();
    let mut map = BTreeMap::new();
    for orig in &originals {
        let fresh = loop {
            let candidate: u32 = rng.gen_range(100_000..1_000_000);
            if used.insert(candidate) {
                break candidate;
            }
        };
        map.insert(orig.clone(), fresh.to_string());
    }
    let out = bundle.map_tables(|_, t| {
        let id = t.id_index().expect("validated");
        let values = t.ids().into_iter().map(|s| Value::Text(map[s].clone())).collect();
        t.with_column(id, t.specs()[id].clone(), values)
    })?;
    Ok((out, IdMapping { pairs: map.into_iter().collect() }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub n_bins: usize,
    pub bin_labels: Vec<String>,
    pub pass_threshold: f64,
    pub seed: u64,
    pub fold_local_refit: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        let b = BinningConfig::default();
        PreprocessConfig {
            n_bins: b.n_bins,
            bin_labels: b.labels,
            pass_threshold: 5.0,
            seed: 1,
            fold_local_refit: false,
        }
    }
}

impl PreprocessConfig {
    pub fn binning(&self) -> BinningConfig {
        BinningConfig { n_bins: self.n_bins, labels: self.bin_labels.clone() }
    }

    pub fn class_rule(&self) -> ClassRule {
        ClassRule { pass_threshold: self.pass_threshold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    Numeric,
    Discretized,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Numeric, Variant::Discretized];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Numeric => "numeric",
            Variant::Discretized => "discretized",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }
}

/// Fitted per-column transforms, keyed by attribute name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FittedParams {
    pub normalization: BTreeMap<String, NormalizationParams>,
    pub binning: BTreeMap<String, BinningParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    /// Session-fused raw values with the exam turned into the class.
    pub fused: SourceBundle,
    pub numeric: SourceBundle,
    pub discretized: SourceBundle,
    pub params: FittedParams,
}

impl Preprocessed {
    pub fn variant(&self, v: Variant) -> &SourceBundle {
        match v {
            Variant::Numeric => &self.numeric,
            Variant::Discretized => &self.discretized,
        }
    }
}

/// Turns the exam table into `id, Class`. A table that already carries
/// a class column is kept as is.
pub fn exam_to_class(exam: &DataTable, rule: &ClassRule) -> Result<DataTable> {
    let id = exam.id_index().ok_or_else(|| Error::InvalidSchema("exam table has no id".into()))?;
    if let Some(c) = exam.class_index() {
        return exam.project(&[id, c]);
    }
    let numeric: Vec<usize> = exam.input_indices().into_iter().filter(|&c| exam.specs()[c].kind.is_numeric()).collect();
    let [score] = numeric[..] else {
        return Err(Error::InvalidSchema(format!(
            "exam table needs exactly one numeric score column, found {}",
            numeric.len()
        )));
    };
    let mut rows = Vec::with_capacity(exam.n_rows());
    for row in exam.rows() {
        let status = label_class(row[score].as_f64(), rule)?;
        rows.push(vec![row[id].clone(), Value::Nominal(status.index())]);
    }
    DataTable::new(vec![exam.specs()[id].clone(), class_spec()], rows)
}

/// Fuses sessions in every input source and labels the exam. Tables come
/// back sorted by id so row `i` is the same student in every source.
pub fn fuse_bundle(bundle: &SourceBundle, rule: &ClassRule) -> Result<SourceBundle> {
    bundle.validate_ids()?;
    bundle.map_tables(|s, t| {
        let t = t.sorted_by_id();
        if s == Source::Exam {
            exam_to_class(&t, rule)
        } else {
            fuse_sessions(&t)
        }
    })
}

/// Builds one variant from a fused bundle, fitting each column's
/// transform on `fit_rows` only (all rows when `None`).
pub fn transform_variant(
    fused: &SourceBundle,
    variant: Variant,
    binning: &BinningConfig,
    fit_rows: Option<&[usize]>,
) -> Result<(SourceBundle, FittedParams)> {
    binning.validate()?;
    let mut params = FittedParams::default();
    let out = fused.map_tables(|s, t| {
        if s == Source::Exam {
            return Ok(t.clone());
        }
        let mut table = t.clone();
        for c in t.input_indices() {
            let spec = &t.specs()[c];
            if !spec.kind.is_numeric() {
                continue;
            }
            let column: Vec<Option<f64>> = t.column(c).map(Value::as_f64).collect();
            let fit_column: Vec<Option<f64>> = match fit_rows {
                Some(rows) => rows.iter().map(|&r| column[r]).collect(),
                None => column.clone(),
            };
            match variant {
                Variant::Numeric => {
                    let p = NormalizationParams::fit(&fit_column)?;
                    let values = column.iter().map(|x| x.map_or(Value::Missing, |x| Value::Numeric(p.apply(x))));
                    table = table.with_column(c, spec.clone(), values.collect())?;
                    params.normalization.insert(spec.name.clone(), p);
                }
                Variant::Discretized => {
                    let p = BinningParams::fit(&fit_column, binning)?;
                    let values = column.iter().map(|x| x.map_or(Value::Missing, |x| Value::Nominal(p.bin(x))));
                    table = table.with_column(c, p.spec(&spec.name), values.collect())?;
                    params.binning.insert(spec.name.clone(), p);
                }
            }
        }
        Ok(table)
    })?;
    Ok((out, params))
}

/// Session fusion, then min-max normalization for the numeric variant and
/// equal-width binning for the discretized one. Both variants share ids
/// and the class column.
pub fn preprocess_bundle(bundle: &SourceBundle, config: &PreprocessConfig) -> Result<Preprocessed> {
    let fused = fuse_bundle(bundle, &config.class_rule())?;
    let binning = config.binning();
    let (numeric, norm) = transform_variant(&fused, Variant::Numeric, &binning, None)?;
    let (discretized, bins) = transform_variant(&fused, Variant::Discretized, &binning, None)?;
    let params = FittedParams { normalization: norm.normalization, binning: bins.binning };
    Ok(Preprocessed { fused, numeric, discretized, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn some(xs: &[f64]) -> Vec<Option<f64>> {
        xs.iter().copied().map(Some).collect()
    }

    #[test]
    fn normalize_endpoints_and_midpoint() {
        let (out, p) = min_max_normalize(&some(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(out, some(&[0.0, 0.5, 1.0]));
        assert_eq!(p, NormalizationParams { min: 2.0, max: 6.0 });
    }

    #[test]
    fn normalize_constant_column_to_zero() {
        let (out, _) = min_max_normalize(&some(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(out, some(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn normalize_attention_scale() {
        let p = NormalizationParams::fit(&some(&[0.0, 110.0])).unwrap();
        assert_eq!(p.apply(55.0), 0.5);
    }

    #[test]
    fn normalize_empty_column_fails() {
        assert_eq!(min_max_normalize(&[None, None]), Err(Error::EmptyColumn));
        assert_eq!(min_max_normalize(&[]), Err(Error::EmptyColumn));
    }

    #[test]
    fn missing_passes_through_normalization() {
        let (out, _) = min_max_normalize(&[Some(1.0), None, Some(3.0)]).unwrap();
        assert_eq!(out, [Some(0.0), None, Some(1.0)]);
    }

    #[test]
    fn equal_width_boundaries() {
        let cfg = BinningConfig::default();
        let (bins, p) = equal_width_discretize(&some(&[0.0, 3.0, 9.0, 2.999, 6.0]), &cfg).unwrap();
        assert_eq!(bins, [Some(0), Some(1), Some(2), Some(0), Some(2)]);
        assert_eq!(p.labels[bins[1].unwrap()], "Medium");
        assert_eq!(p.labels[bins[2].unwrap()], "High");
    }

    #[test]
    fn constant_column_bins_to_zero() {
        let (bins, _) = equal_width_discretize(&some(&[4.0, 4.0]), &BinningConfig::default()).unwrap();
        assert_eq!(bins, [Some(0), Some(0)]);
    }

    #[test]
    fn binning_config_validation() {
        let cfg = BinningConfig { n_bins: 1, labels: vec!["a".into()] };
        assert!(equal_width_discretize(&some(&[1.0]), &cfg).is_err());
        let cfg = BinningConfig { n_bins: 3, labels: vec!["a".into()] };
        assert!(equal_width_discretize(&some(&[1.0]), &cfg).is_err());
    }

    #[test]
    fn class_labels() {
        let r = ClassRule::default();
        assert_eq!(label_class(Some(5.0), &r), Ok(Status::Pass));
        assert_eq!(label_class(Some(4.99), &r), Ok(Status::Fail));
        assert_eq!(label_class(None, &r), Ok(Status::Dropout));
        assert_eq!(label_class(Some(10.5), &r), Err(Error::OutOfRangeScore(10.5)));
        assert_eq!(label_class(Some(-0.1), &r), Err(Error::OutOfRangeScore(-0.1)));
    }

    #[test]
    fn session_names() {
        assert_eq!(session_base("Theory.Attendance.s12"), Some(("Theory.Attendance", 12)));
        assert_eq!(session_base("Theory.Attendance"), None);
        assert_eq!(session_base("x.sa"), None);
    }

    #[test]
    fn mode_tie_breaks_low() {
        assert_eq!(fuse_mode(&[Some(0), Some(0), Some(2)], 3), Some(0));
        assert_eq!(fuse_mode(&[Some(0), Some(2)], 3), Some(0));
        assert_eq!(fuse_mode(&[Some(2), Some(1)], 3), Some(1));
        assert_eq!(fuse_mode(&[None], 3), None);
    }

    fn session_table() -> DataTable {
        let mut specs = vec![AttributeSpec::id("id")];
        for k in 1..=15 {
            specs.push(AttributeSpec::numeric(&format!("Theory.Attendance.s{k}")));
        }
        specs.push(AttributeSpec::nominal("Theory.Mood.s1", &BIN_LABELS));
        specs.push(AttributeSpec::nominal("Theory.Mood.s2", &BIN_LABELS));
        specs.push(AttributeSpec::numeric("Other"));
        let mut row = vec![Value::Text("1".into())];
        row.extend((0..15).map(|_| Value::Numeric(1.0)));
        row.extend([Value::Nominal(0), Value::Nominal(2), Value::Numeric(7.0)]);
        DataTable::new(specs, vec![row]).unwrap()
    }

    #[test]
    fn fuse_sessions_mean_mode_passthrough() {
        let fused = fuse_sessions(&session_table()).unwrap();
        let names: Vec<&str> = fused.specs().iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["id", "Theory.Attendance", "Theory.Mood", "Other"]);
        assert_eq!(fused.rows()[0][1], Value::Numeric(1.0));
        assert_eq!(fused.rows()[0][2], Value::Nominal(0));
        assert_eq!(fused.rows()[0][3], Value::Numeric(7.0));
    }

    #[test]
    fn fuse_sessions_rejects_mixed_kinds() {
        let specs =
            vec![AttributeSpec::id("id"), AttributeSpec::numeric("A.s1"), AttributeSpec::nominal("A.s2", &BIN_LABELS)];
        let t = DataTable::new(specs, vec![]).unwrap();
        assert_eq!(fuse_sessions(&t), Err(Error::MixedKindGroup("A".into())));
    }

    #[test]
    fn winsorize_clamps_tail() {
        let col: Vec<Option<f64>> = (1..=100).map(|x| Some(x as f64)).collect();
        let w = winsorize(&col, 0.0, 99.0).unwrap();
        assert_eq!(w[99], Some(99.0));
        assert_eq!(w[0], Some(1.0));
    }
}
