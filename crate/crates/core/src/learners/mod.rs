//! The six white-box classifiers and the `Model` wrapper they share.
//!
//! Every model keeps its input schema, so it can validate instances,
//! emit class distributions and render itself as IF-THEN text.

mod c45;
mod data;
mod nnge;
mod part;
mod randomtree;
mod reptree;
mod ripper;
mod rules;
mod tree;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use c45::C45Params;
pub use data::{Encoder, Test};
pub use nnge::{Bound, Exemplar, ExemplarSet, NngeParams};
pub use part::PartParams;
pub use randomtree::RandomTreeParams;
pub use reptree::RepTreeParams;
pub use ripper::RipperParams;
pub use rules::{parse_rules, parse_rules_with, Condition, ParsedRules, Rule, RuleList};
pub use tree::{DecisionTree, Node};

use crate::error::{Error, Result};
use crate::math;
use crate::table::{AttrKind, AttributeSpec, DataTable, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    C45,
    RepTree,
    RandomTree,
    Ripper,
    Part,
    Nnge,
}

impl Algorithm {
    /// Table order used by the experiment grid.
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Ripper,
        Algorithm::Nnge,
        Algorithm::Part,
        Algorithm::C45,
        Algorithm::RandomTree,
        Algorithm::RepTree,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::C45 => "c45",
            Algorithm::RepTree => "reptree",
            Algorithm::RandomTree => "randomtree",
            Algorithm::Ripper => "ripper",
            Algorithm::Part => "part",
            Algorithm::Nnge => "nnge",
        }
    }

    /// Display name of the reference implementation.
    pub fn title(self) -> &'static str {
        match self {
            Algorithm::C45 => "J48",
            Algorithm::RepTree => "REPTree",
            Algorithm::RandomTree => "RandomTree",
            Algorithm::Ripper => "JRip",
            Algorithm::Part => "PART",
            Algorithm::Nnge => "NNge",
        }
    }

    /// Accepts tags and display names, case-insensitively.
    pub fn parse(s: &str) -> Option<Algorithm> {
        let s = s.trim();
        Algorithm::ALL.into_iter().find(|a| a.tag().eq_ignore_ascii_case(s) || a.title().eq_ignore_ascii_case(s))
    }

    fn is_order_sensitive(self) -> bool {
        self == Algorithm::Nnge
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    pub c45: C45Params,
    pub reptree: RepTreeParams,
    pub randomtree: RandomTreeParams,
    pub ripper: RipperParams,
    pub part: PartParams,
    pub nnge: NngeParams,
}

impl LearnerParams {
    pub fn validate(&self, algorithm: Algorithm) -> Result<()> {
        match algorithm {
            Algorithm::C45 => self.c45.validate(),
            Algorithm::RepTree => self.reptree.validate(),
            Algorithm::RandomTree => self.randomtree.validate(),
            Algorithm::Ripper => self.ripper.validate(),
            Algorithm::Part => self.part.validate(),
            Algorithm::Nnge => self.nnge.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Structure {
    Tree(DecisionTree),
    Rules(RuleList),
    Exemplars(ExemplarSet),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub params: LearnerParams,
    pub n_train: usize,
    /// Fewer than two classes were present; the model is constant.
    pub degenerate: bool,
    pub notes: Vec<String>,
}

/// Per model attribute: the table column and, for nominal attributes,
/// the model label index of each table label.
type ColumnMap = Vec<(usize, Option<Vec<Option<usize>>>)>;

/// A trained (or hand-written) classifier over a fixed input schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    /// `None` for rule lists that were parsed rather than learned.
    pub algorithm: Option<Algorithm>,
    pub attributes: Vec<AttributeSpec>,
    pub class: AttributeSpec,
    pub structure: Structure,
    pub encoder: Encoder,
    pub meta: TrainingMeta,
}

/// Why a model predicted what it did for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub label: String,
    pub distribution: Vec<f64>,
    /// The rule, tree path or exemplar that decided the prediction.
    pub reason: String,
}

/// Trains `algorithm` on the input and class columns of `table`.
///
/// Rows with a missing class are ignored. A table with a single class
/// yields a constant model flagged as degenerate in its metadata.
pub fn train(algorithm: Algorithm, table: &DataTable, params: &LearnerParams, seed: u64) -> Result<Model> {
    params.validate(algorithm)?;
    let (attributes, class, encoder, mut data) = data::from_table(table)?;
    if data.len() == 0 {
        return Err(Error::TooFewRows("no rows with a known class".into()));
    }
    if !algorithm.is_order_sensitive() {
        data.canonicalize();
    }
    let all: Vec<usize> = (0..data.len()).collect();
    let totals = data.counts(&all);
    let mut meta =
        TrainingMeta { seed, params: params.clone(), n_train: data.len(), degenerate: false, notes: Vec::new() };
    if totals.iter().filter(|&&c| c > 0.0).count() < 2 {
        meta.degenerate = true;
        meta.notes.push("single class present; constant model".into());
        let structure = Structure::Rules(RuleList {
            rules: Vec::new(),
            default_class: math::argmax(&totals),
            default_counts: totals,
        });
        return Ok(Model { algorithm: Some(algorithm), attributes, class, structure, encoder, meta });
    }
    let structure = match algorithm {
        Algorithm::C45 => Structure::Tree(c45::train(&data, &params.c45)),
        Algorithm::RepTree => Structure::Tree(reptree::train(&data, &params.reptree, seed)),
        Algorithm::RandomTree => Structure::Tree(randomtree::train(&data, &params.randomtree, seed)),
        Algorithm::Ripper => {
            meta.notes.push(format!("{} optimization pass(es)", params.ripper.optimizations));
            Structure::Rules(ripper::train(&data, &params.ripper, seed))
        }
        Algorithm::Part => Structure::Rules(part::train(&data, &params.part)),
        Algorithm::Nnge => {
            meta.notes.push("order-sensitive: depends on training row order".into());
            Structure::Exemplars(nnge::train(&data, &params.nnge))
        }
    };
    Ok(Model { algorithm: Some(algorithm), attributes, class, structure, encoder, meta })
}

impl Model {
    /// Wraps a rule list written against `attributes` and `class`.
    pub fn from_rules(attributes: Vec<AttributeSpec>, class: AttributeSpec, rules: RuleList) -> Model {
        let encoder = Encoder::identity(&attributes);
        Model {
            algorithm: None,
            attributes,
            class,
            structure: Structure::Rules(rules),
            encoder,
            meta: TrainingMeta::default(),
        }
    }

    /// Parses rule text against this model's schema.
    pub fn from_rule_text(text: &str, attributes: &[AttributeSpec], class: &AttributeSpec) -> Result<Model> {
        let rules = parse_rules_with(text, attributes, class)?;
        Ok(Model::from_rules(attributes.to_vec(), class.clone(), rules))
    }

    pub fn class_labels(&self) -> &[String] {
        self.class.labels().unwrap_or(&[])
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels().len()
    }

    fn check(&self, instance: &[Value]) -> Result<()> {
        if instance.len() != self.attributes.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} values, got {}",
                self.attributes.len(),
                instance.len()
            )));
        }
        for (spec, v) in self.attributes.iter().zip(instance) {
            let ok = match (&spec.kind, v) {
                (_, Value::Missing) => true,
                (AttrKind::Numeric, Value::Numeric(x)) => x.is_finite(),
                (AttrKind::Nominal(l), Value::Nominal(i)) => *i < l.len(),
                _ => false,
            };
            if !ok {
                return Err(Error::SchemaMismatch(format!("value {v:?} does not fit attribute `{}`", spec.name)));
            }
        }
        Ok(())
    }

    /// Class distribution for one instance given in attribute order.
    pub fn predict(&self, instance: &[Value]) -> Result<Vec<f64>> {
        self.check(instance)?;
        let n = self.n_classes();
        if self.meta.degenerate {
            if let Structure::Rules(r) = &self.structure {
                let mut d = vec![0.0; n];
                d[r.default_class] = 1.0;
                return Ok(d);
            }
        }
        let x = self.encoder.encode(&self.attributes, instance);
        Ok(match &self.structure {
            Structure::Tree(t) => t.distribution(&x),
            Structure::Rules(r) => r.distribution(&x, n),
            Structure::Exemplars(e) => e.distribution(&x),
        })
    }

    /// Index of the most probable class; ties go to the earlier label.
    pub fn predict_class(&self, instance: &[Value]) -> Result<usize> {
        Ok(math::argmax(&self.predict(instance)?))
    }

    /// Predicts every row of `table`, matching columns by name.
    pub fn predict_table(&self, table: &DataTable) -> Result<Vec<Vec<f64>>> {
        let mapping = self.column_mapping(table)?;
        table.rows().iter().map(|row| self.predict(&self.map_row(&mapping, row))).collect()
    }

    fn column_mapping(&self, table: &DataTable) -> Result<ColumnMap> {
        self.attributes
            .iter()
            .map(|spec| {
                let col = table
                    .attr_index(&spec.name)
                    .ok_or_else(|| Error::SchemaMismatch(format!("table lacks attribute `{}`", spec.name)))?;
                let labels = match (&spec.kind, &table.specs()[col].kind) {
                    (AttrKind::Nominal(mine), AttrKind::Nominal(theirs)) => {
                        Some(theirs.iter().map(|l| mine.iter().position(|m| m == l)).collect())
                    }
                    (AttrKind::Numeric, AttrKind::Numeric) => None,
                    _ => return Err(Error::SchemaMismatch(format!("attribute `{}` changes kind", spec.name))),
                };
                Ok((col, labels))
            })
            .collect()
    }

    fn map_row(&self, mapping: &ColumnMap, row: &[Value]) -> Vec<Value> {
        mapping
            .iter()
            .map(|(col, labels)| match (&row[*col], labels) {
                (Value::Nominal(i), Some(map)) => map.get(*i).copied().flatten().map_or(Value::Missing, Value::Nominal),
                (v, _) => v.clone(),
            })
            .collect()
    }

    /// Extracts this model's inputs from row `row` of `table`.
    pub fn instance_from_row(&self, table: &DataTable, row: usize) -> Result<Vec<Value>> {
        let mapping = self.column_mapping(table)?;
        let r = table.rows().get(row).ok_or_else(|| Error::SchemaMismatch(format!("row {row} out of range")))?;
        Ok(self.map_row(&mapping, r))
    }

    /// Human-readable IF-THEN text of the model.
    pub fn render(&self) -> String {
        let labels = self.class_labels();
        match &self.structure {
            Structure::Tree(t) => t.render(&self.attributes, labels),
            Structure::Rules(r) => r.render(&self.attributes, labels),
            Structure::Exemplars(e) => e.render(&self.attributes, labels),
        }
    }

    pub fn explain(&self, instance: &[Value]) -> Result<Explanation> {
        let distribution = self.predict(instance)?;
        let label = self.class_labels()[math::argmax(&distribution)].clone();
        let x = self.encoder.encode(&self.attributes, instance);
        let labels = self.class_labels();
        let reason = match &self.structure {
            Structure::Tree(t) => {
                let reached = t.reach(&x);
                let conds: Vec<String> =
                    reached.path.iter().map(|(test, b)| tree::condition_text(test, *b, &self.attributes)).collect();
                if conds.is_empty() {
                    format!("ELSE {label}")
                } else {
                    format!("IF {} THEN {label}", conds.join(" AND "))
                }
            }
            Structure::Rules(r) => r.render_rule(r.fire(&x), &self.attributes, labels),
            Structure::Exemplars(e) => match e.nearest(&x) {
                Some(i) => e.render_exemplar(i, &self.attributes, labels),
                None => "no exemplars".to_string(),
            },
        };
        Ok(Explanation { label, distribution, reason })
    }

    /// Number of rules, leaves or exemplars.
    pub fn complexity(&self) -> usize {
        match &self.structure {
            Structure::Tree(t) => t.num_leaves(),
            Structure::Rules(r) => r.len(),
            Structure::Exemplars(e) => e.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{AttributeSpec, Role};

    fn table(rows: &[(f64, usize)]) -> DataTable {
        let specs = vec![
            AttributeSpec::numeric("x"),
            AttributeSpec::nominal("Class", &["Pass", "Fail", "Dropout"]).with_role(Role::Class),
        ];
        DataTable::new(specs, rows.iter().map(|&(x, c)| vec![Value::Numeric(x), Value::Nominal(c)]).collect()).unwrap()
    }

    #[test]
    fn degenerate_is_constant() {
        let t = table(&[(1.0, 1), (2.0, 1), (3.0, 1)]);
        for alg in Algorithm::ALL {
            let m = train(alg, &t, &LearnerParams::default(), 1).unwrap();
            assert!(m.meta.degenerate);
            assert_eq!(m.predict(&[Value::Numeric(9.0)]).unwrap(), vec![0.0, 1.0, 0.0]);
            assert_eq!(m.render(), "ELSE Fail\nNumber of Rules : 1\n");
        }
    }

    #[test]
    fn schema_mismatch() {
        let t = table(&[(1.0, 0), (2.0, 0), (3.0, 1), (4.0, 1)]);
        let m = train(Algorithm::C45, &t, &LearnerParams::default(), 1).unwrap();
        assert!(matches!(m.predict(&[]), Err(Error::SchemaMismatch(_))));
        assert!(matches!(m.predict(&[Value::Nominal(0)]), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn separable_data_learned_by_all() {
        let rows: Vec<(f64, usize)> = (0..30).map(|i| (i as f64, usize::from(i >= 15))).collect();
        let t = table(&rows);
        for alg in Algorithm::ALL {
            let m = train(alg, &t, &LearnerParams::default(), 3).unwrap();
            for &(x, c) in &rows {
                assert_eq!(m.predict_class(&[Value::Numeric(x)]).unwrap(), c, "{alg} at {x}");
            }
        }
    }

    #[test]
    fn algorithm_parse() {
        assert_eq!(Algorithm::parse("J48"), Some(Algorithm::C45));
        assert_eq!(Algorithm::parse("jrip"), Some(Algorithm::Ripper));
        assert_eq!(Algorithm::parse("nnge"), Some(Algorithm::Nnge));
        assert_eq!(Algorithm::parse("svm"), None);
    }
}
