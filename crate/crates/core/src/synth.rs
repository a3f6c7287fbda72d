//! Seeded synthetic cohorts with a planted IF-THEN ruleset.
//!
//! Each student gets a class, then a bin (Low/Medium/High) for each of
//! the ten fused attributes such that the planted decision list maps the
//! bins to that class. Bins become fused values strictly inside their
//! equal-width interval, and fused values are expanded into per-session
//! columns whose mean equals the fused value. The attribute range is
//! pinned by one student at each end so equal-width binning of the
//! generated data reproduces the planted bins exactly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{Model, Structure};
use crate::preprocess::{class_spec, Status, BIN_LABELS, CLASS_LABELS};
use crate::rng::{self, Rng};
use crate::table::{AttributeSpec, DataTable, Role, Source, SourceBundle, Value};

/// The PART decision list reported for the merged discretized data.
pub const PLANTED_RULES: &str = "IF Moodle.Quiz = High THEN Pass
IF Moodle.Quiz = Medium AND Theory.Attention = Medium THEN Pass
IF Moodle.Quiz = Low THEN Fail
IF Theory.Attention = Low AND Moodle.Forum = Low THEN Dropout
ELSE Pass
Number of Rules : 5
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    /// Per-session 0/1 values; the fused value is the attended fraction.
    Binary,
    Continuous,
    /// A single whole-number column.
    Integer,
}

#[derive(Debug, Clone, Copy)]
struct AttrDef {
    name: &'static str,
    source: Source,
    lo: f64,
    hi: f64,
    shape: Shape,
}

const ATTRS: [AttrDef; 10] = [
    AttrDef { name: "Theory.Attendance", source: Source::Theory, lo: 0.0, hi: 1.0, shape: Shape::Binary },
    AttrDef { name: "Theory.Location", source: Source::Theory, lo: 0.0, hi: 12.0, shape: Shape::Continuous },
    AttrDef { name: "Theory.Attention", source: Source::Theory, lo: 0.0, hi: 110.0, shape: Shape::Continuous },
    AttrDef { name: "Theory.TakeNotes", source: Source::Theory, lo: 0.0, hi: 110.0, shape: Shape::Continuous },
    AttrDef { name: "Practice.Attendance", source: Source::Practice, lo: 0.0, hi: 1.0, shape: Shape::Binary },
    AttrDef { name: "Practice.Score", source: Source::Practice, lo: 1.0, hi: 10.0, shape: Shape::Continuous },
    AttrDef { name: "Moodle.Quiz", source: Source::Online, lo: 0.0, hi: 10.0, shape: Shape::Continuous },
    AttrDef { name: "Moodle.Forum", source: Source::Online, lo: 0.0, hi: 40.0, shape: Shape::Integer },
    AttrDef { name: "Moodle.Task", source: Source::Online, lo: 0.0, hi: 8.0, shape: Shape::Integer },
    AttrDef { name: "Moodle.Time", source: Source::Online, lo: 0.0, hi: 3000.0, shape: Shape::Continuous },
];

const N_BINS: usize = 3;

/// Names of the ten fused input attributes in merged-table order.
pub fn attribute_names() -> Vec<&'static str> {
    ATTRS.iter().map(|a| a.name).collect()
}

/// The fused, discretized input schema the planted rules refer to.
pub fn fused_schema() -> Vec<AttributeSpec> {
    ATTRS.iter().map(|a| AttributeSpec::nominal(a.name, &BIN_LABELS)).collect()
}

/// The planted PART decision list as a model over the fused schema.
pub fn default_ruleset() -> Model {
    Model::from_rule_text(PLANTED_RULES, &fused_schema(), &class_spec()).expect("built-in rules parse")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_students: usize,
    /// Students per class in Pass, Fail, Dropout order.
    pub class_counts: Vec<usize>,
    /// Fraction of students whose labels are rotated among themselves.
    pub noise: f64,
    pub theory_sessions: usize,
    pub practice_sessions: usize,
    pub practicals: usize,
    pub seed: u64,
    /// Planted rules; `None` means the default planted list.
    #[serde(skip)]
    pub ruleset: Option<Model>,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_students: 57,
            class_counts: vec![19, 17, 21],
            noise: 0.0,
            theory_sessions: 15,
            practice_sessions: 10,
            practicals: 5,
            seed: 1,
            ruleset: None,
        }
    }
}

impl CohortSpec {
    /// The default cohort with every class count multiplied by `factor`.
    pub fn scaled(factor: usize) -> CohortSpec {
        let d = CohortSpec::default();
        CohortSpec {
            n_students: d.n_students * factor,
            class_counts: d.class_counts.iter().map(|c| c * factor).collect(),
            ..d
        }
    }

    /// Class counts for `n` students in the default 19/17/21 proportions,
    /// rounding by largest remainder.
    pub fn with_students(n: usize) -> CohortSpec {
        let base = CohortSpec::default();
        let total = base.n_students;
        let mut counts: Vec<usize> = base.class_counts.iter().map(|c| c * n / total).collect();
        let mut rest: Vec<(usize, usize)> =
            base.class_counts.iter().enumerate().map(|(i, c)| (c * n % total, i)).collect();
        rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let missing = n - counts.iter().sum::<usize>();
        for &(_, i) in rest.iter().take(missing) {
            counts[i] += 1;
        }
        CohortSpec { n_students: n, class_counts: counts, ..base }
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_counts.len() != CLASS_LABELS.len() {
            return Err(Error::InvalidParams(format!("need {} class counts", CLASS_LABELS.len())));
        }
        if self.class_counts.iter().sum::<usize>() != self.n_students {
            return Err(Error::InvalidParams("class counts must sum to n_students".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::InvalidParams("noise must lie in [0, 1]".into()));
        }
        if self.theory_sessions == 0 || self.practice_sessions == 0 || self.practicals == 0 {
            return Err(Error::InvalidParams("session counts must be positive".into()));
        }
        if self.n_students == 0 {
            return Err(Error::InvalidParams("n_students must be positive".into()));
        }
        Ok(())
    }

    fn sessions(&self, def: &AttrDef) -> usize {
        match def.name {
            "Theory.Attendance" | "Theory.Location" | "Theory.Attention" | "Theory.TakeNotes" => self.theory_sessions,
            "Practice.Attendance" => self.practice_sessions,
            "Practice.Score" => self.practicals,
            _ => 1,
        }
    }
}

/// A generated cohort with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    /// Raw per-session tables for Theory, Practice, Online and Exam.
    pub bundle: SourceBundle,
    pub ids: Vec<String>,
    /// Final labels, after noise, as encoded by the exam table.
    pub labels: Vec<Status>,
    /// Labels the planted rules assign to each student's bins.
    pub planted: Vec<Status>,
    /// Bin per student and fused attribute, in `attribute_names` order.
    pub bins: Vec<Vec<usize>>,
    /// Fused value per student and attribute.
    pub fused: Vec<Vec<f64>>,
}

const STATUSES: [Status; 3] = [Status::Pass, Status::Fail, Status::Dropout];

fn width(def: &AttrDef) -> f64 {
    (def.hi - def.lo) / N_BINS as f64
}

fn bin_of(def: &AttrDef, x: f64) -> Option<usize> {
    let w = width(def);
    for i in 1..N_BINS {
        if x == def.lo + i as f64 * w {
            return None;
        }
    }
    let b = ((x - def.lo) / w) as usize;
    Some(b.min(N_BINS - 1))
}

/// Fused value for bin `b`; `anchor` pins the range endpoints.
fn draw_value(def: &AttrDef, b: usize, sessions: usize, anchor: bool, rng: &mut Rng) -> f64 {
    if anchor && b == 0 {
        return def.lo;
    }
    if anchor && b == N_BINS - 1 {
        return def.hi;
    }
    let discrete: Option<Vec<f64>> = match def.shape {
        Shape::Binary => Some((0..=sessions).map(|k| k as f64 / sessions as f64).collect()),
        Shape::Integer => Some((def.lo as i64..=def.hi as i64).map(|v| v as f64).collect()),
        Shape::Continuous => None,
    };
    match discrete {
        Some(values) => {
            let inside: Vec<f64> = values.into_iter().filter(|&v| bin_of(def, v) == Some(b)).collect();
            inside[rng.gen_range(0..inside.len())]
        }
        None => def.lo + (b as f64 + rng.gen_range(0.15..0.85)) * width(def),
    }
}

/// Per-session values with mean `v`.
fn expand_sessions(def: &AttrDef, v: f64, sessions: usize, rng: &mut Rng) -> Vec<f64> {
    match def.shape {
        Shape::Binary => {
            let k = libm::round(v * sessions as f64) as usize;
            let mut s: Vec<f64> = (0..sessions).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
            s.shuffle(rng);
            s
        }
        _ => {
            let room = (v - def.lo).min(def.hi - v).min(0.2 * width(def)).max(0.0);
            let mut s = Vec::with_capacity(sessions);
            for _ in 0..sessions / 2 {
                let d = rng.gen_range(-1.0..=1.0) * room;
                s.push(v + d);
                s.push(v - d);
            }
            if sessions % 2 == 1 {
                s.push(v);
            }
            s
        }
    }
}

/// Bin combinations of the ruleset attributes, grouped by the class the
/// decision list assigns to them.
fn combinations_by_class(ruleset: &Model, attrs: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let n_classes = ruleset.n_classes();
    let mut by_class = vec![Vec::new(); n_classes];
    let total = N_BINS.pow(attrs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut combo = vec![0; attrs.len()];
        for slot in combo.iter_mut().rev() {
            *slot = c % N_BINS;
            c /= N_BINS;
        }
        let mut x = vec![Value::Nominal(0); ruleset.attributes.len()];
        for (&a, &b) in attrs.iter().zip(&combo) {
            x[a] = Value::Nominal(b);
        }
        if let Ok(class) = ruleset.predict_class(&x) {
            by_class[class].push(combo);
        }
    }
    by_class
}

/// Generates a cohort. Deterministic given the spec.
pub fn generate(spec: &CohortSpec) -> Result<Cohort> {
    spec.validate()?;
    let default_rules;
    let ruleset = match &spec.ruleset {
        Some(m) => m,
        None => {
            default_rules = default_ruleset();
            &default_rules
        }
    };
    let Structure::Rules(rules) = &ruleset.structure else {
        return Err(Error::InvalidParams("planted model must be a rule list".into()));
    };
    if ruleset.class_labels() != CLASS_LABELS {
        return Err(Error::InvalidParams("planted rules must predict Pass/Fail/Dropout".into()));
    }
    // Map the ruleset's attributes onto the generator's attributes.
    let mut used: Vec<usize> = rules.rules.iter().flat_map(|r| r.conditions.iter().map(|c| c.attr())).collect();
    used.sort_unstable();
    used.dedup();
    let mut def_of = Vec::new();
    for &a in &used {
        let spec_a = &ruleset.attributes[a];
        let def = ATTRS
            .iter()
            .position(|d| d.name == spec_a.name)
            .ok_or_else(|| Error::InvalidParams(format!("unknown planted attribute `{}`", spec_a.name)))?;
        if spec_a.labels().map(<[String]>::len) != Some(N_BINS) {
            return Err(Error::InvalidParams(format!("planted attribute `{}` needs {N_BINS} labels", spec_a.name)));
        }
        def_of.push(def);
    }
    let combos = combinations_by_class(ruleset, &used);
    for (c, &count) in spec.class_counts.iter().enumerate() {
        if count > 0 && combos[c].is_empty() {
            return Err(Error::InfeasibleRuleset(format!("no bin combination yields {}", CLASS_LABELS[c])));
        }
    }

    let mut rng = rng::seeded(spec.seed);
    let n = spec.n_students;
    let mut planted: Vec<usize> = spec.class_counts.iter().enumerate().flat_map(|(c, &k)| vec![c; k]).collect();
    planted.shuffle(&mut rng);

    // Bins: ruleset attributes from a class-consistent combination, dealt
    // round-robin over a shuffled list so every combination is used; the
    // other attributes balanced over the three bins.
    let mut bins = vec![vec![0; ATTRS.len()]; n];
    let mut decks: Vec<Vec<Vec<usize>>> = combos.clone();
    let mut dealt = vec![0usize; combos.len()];
    for (s, &c) in planted.iter().enumerate() {
        if dealt[c].is_multiple_of(combos[c].len()) {
            decks[c].shuffle(&mut rng);
        }
        let combo = &decks[c][dealt[c] % combos[c].len()];
        dealt[c] += 1;
        for (&d, &b) in def_of.iter().zip(combo) {
            bins[s][d] = b;
        }
    }
    for d in (0..ATTRS.len()).filter(|d| !def_of.contains(d)) {
        let mut deck: Vec<usize> = (0..n).map(|i| i % N_BINS).collect();
        deck.shuffle(&mut rng);
        for s in 0..n {
            bins[s][d] = deck[s];
        }
    }
    for (d, def) in ATTRS.iter().enumerate() {
        for b in [0, N_BINS - 1] {
            if !bins.iter().any(|row| row[d] == b) {
                return Err(Error::InfeasibleRuleset(format!(
                    "no student falls in bin {} of {}; increase n_students",
                    BIN_LABELS[b], def.name
                )));
            }
        }
    }

    // Fused values, anchoring the first student of each end bin.
    let mut fused = vec![vec![0.0; ATTRS.len()]; n];
    for (d, def) in ATTRS.iter().enumerate() {
        let sessions = spec.sessions(def);
        let mut anchored = [false; N_BINS];
        for s in 0..n {
            let b = bins[s][d];
            let anchor = (b == 0 || b == N_BINS - 1) && !anchored[b];
            anchored[b] |= anchor;
            fused[s][d] = draw_value(def, b, sessions, anchor, &mut rng);
        }
    }

    // Label noise: rotate labels among a random subset of students.
    let mut labels = planted.clone();
    let flips = libm::round(spec.noise * n as f64) as usize;
    if flips >= 2 {
        let mut chosen: Vec<usize> = (0..n).collect();
        chosen.shuffle(&mut rng);
        chosen.truncate(flips);
        let first = labels[chosen[0]];
        for w in 0..flips - 1 {
            labels[chosen[w]] = labels[chosen[w + 1]];
        }
        labels[chosen[flips - 1]] = first;
    }

    let width_ids = n.to_string().len().max(3);
    let ids: Vec<String> = (1..=n).map(|i| format!("S{i:0width_ids$}")).collect();
    let bundle = build_bundle(spec, &ids, &fused, &labels, &mut rng)?;
    Ok(Cohort {
        bundle,
        ids,
        labels: labels.iter().map(|&c| STATUSES[c]).collect(),
        planted: planted.iter().map(|&c| STATUSES[c]).collect(),
        bins,
        fused,
    })
}

fn build_bundle(
    spec: &CohortSpec,
    ids: &[String],
    fused: &[Vec<f64>],
    labels: &[usize],
    rng: &mut Rng,
) -> Result<SourceBundle> {
    let mut bundle = SourceBundle::new();
    for source in [Source::Theory, Source::Practice, Source::Online] {
        let mut specs = vec![AttributeSpec::id("Id")];
        let defs: Vec<(usize, &AttrDef)> = ATTRS.iter().enumerate().filter(|(_, d)| d.source == source).collect();
        for (_, def) in &defs {
            let sessions = spec.sessions(def);
            if def.source == Source::Online {
                specs.push(AttributeSpec::numeric(def.name));
            } else {
                specs.extend((1..=sessions).map(|k| AttributeSpec::numeric(&format!("{}.s{k}", def.name))));
            }
        }
        let mut rows = Vec::with_capacity(ids.len());
        for (s, id) in ids.iter().enumerate() {
            let mut row = vec![Value::Text(id.clone())];
            for &(d, def) in &defs {
                if def.source == Source::Online {
                    row.push(Value::Numeric(fused[s][d]));
                } else {
                    let sessions = spec.sessions(def);
                    row.extend(expand_sessions(def, fused[s][d], sessions, rng).into_iter().map(Value::Numeric));
                }
            }
            rows.push(row);
        }
        bundle.insert(source, DataTable::new(specs, rows)?);
    }
    let exam_specs = vec![AttributeSpec::id("Id"), AttributeSpec::numeric("Exam.Score").with_role(Role::Input)];
    let exam_rows = ids
        .iter()
        .zip(labels)
        .map(|(id, &c)| {
            let score = match STATUSES[c] {
                Status::Pass => Value::Numeric(libm::round(rng.gen_range(50.0..=100.0)) / 10.0),
                Status::Fail => Value::Numeric(libm::round(rng.gen_range(0.0..=49.0)) / 10.0),
                Status::Dropout => Value::Missing,
            };
            vec![Value::Text(id.clone()), score]
        })
        .collect();
    bundle.insert(Source::Exam, DataTable::new(exam_specs, exam_rows)?);
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_rules_render_verbatim() {
        assert_eq!(default_ruleset().render(), PLANTED_RULES);
    }

    #[test]
    fn default_cohort_shape() {
        let c = generate(&CohortSpec::default()).unwrap();
        assert_eq!(c.bundle.get(Source::Theory).unwrap().n_cols(), 1 + 4 * 15);
        assert_eq!(c.bundle.get(Source::Practice).unwrap().n_cols(), 1 + 10 + 5);
        assert_eq!(c.bundle.get(Source::Online).unwrap().n_cols(), 1 + 4);
        assert_eq!(c.bundle.get(Source::Exam).unwrap().n_cols(), 2);
        let mut counts = [0; 3];
        for s in &c.labels {
            counts[s.index()] += 1;
        }
        assert_eq!(counts, [19, 17, 21]);
    }

    #[test]
    fn with_students_keeps_proportions() {
        assert_eq!(CohortSpec::with_students(57).class_counts, vec![19, 17, 21]);
        assert_eq!(CohortSpec::with_students(570).class_counts, vec![190, 170, 210]);
        assert_eq!(CohortSpec::with_students(100).class_counts.iter().sum::<usize>(), 100);
    }

    #[test]
    fn bad_specs_rejected() {
        let s = CohortSpec { n_students: 10, ..Default::default() };
        assert!(generate(&s).is_err());
        let s = CohortSpec { noise: 1.5, ..Default::default() };
        assert!(generate(&s).is_err());
    }
}
