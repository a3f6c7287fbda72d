//! Typed tabular data: attribute schema, values, tables and source bundles.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttrKind {
    /// Free text; only used for the Id column.
    Text,
    Numeric,
    /// Ordered label list. Values store an index into it.
    Nominal(Vec<String>),
}

impl AttrKind {
    pub fn labels(&self) -> Option<&[String]> {
        match self {
            AttrKind::Nominal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, AttrKind::Numeric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Id,
    Input,
    Class,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttrKind,
    pub role: Role,
}

impl AttributeSpec {
    pub fn id(name: &str) -> Self {
        AttributeSpec { name: name.into(), kind: AttrKind::Text, role: Role::Id }
    }

    pub fn numeric(name: &str) -> Self {
        AttributeSpec { name: name.into(), kind: AttrKind::Numeric, role: Role::Input }
    }

    pub fn nominal(name: &str, labels: &[&str]) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttrKind::Nominal(labels.iter().map(|s| String::from(*s)).collect()),
            role: Role::Input,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.kind.labels()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels()?.iter().position(|l| l == label)
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidSchema("attribute with empty name".into()));
        }
        if let AttrKind::Nominal(labels) = &self.kind {
            if labels.is_empty() {
                return Err(Error::InvalidSchema(format!("`{}` has no labels", self.name)));
            }
            let unique: BTreeSet<&String> = labels.iter().collect();
            if unique.len() != labels.len() {
                return Err(Error::InvalidSchema(format!("`{}` has duplicate labels", self.name)));
            }
        }
        match (self.role, &self.kind) {
            (Role::Id, AttrKind::Text) => Ok(()),
            (Role::Id, _) => Err(Error::InvalidSchema(format!("id `{}` must be text", self.name))),
            (_, AttrKind::Text) => Err(Error::InvalidSchema(format!("`{}`: text kind is reserved for ids", self.name))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Numeric(f64),
    Nominal(usize),
    Text(String),
    Missing,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Numeric(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_index(&self) -> Option<usize> {
        match self {
            Value::Nominal(i) => Some(*i),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    fn fits(&self, kind: &AttrKind) -> bool {
        match (self, kind) {
            (Value::Missing, _) => true,
            (Value::Numeric(x), AttrKind::Numeric) => x.is_finite(),
            (Value::Nominal(i), AttrKind::Nominal(l)) => *i < l.len(),
            (Value::Text(_), AttrKind::Text) => true,
            _ => false,
        }
    }
}

/// Parses one CSV cell under an attribute. Empty cells become `Missing`.
pub fn parse_cell(text: &str, spec: &AttributeSpec) -> core::result::Result<Value, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Value::Missing);
    }
    match &spec.kind {
        AttrKind::Text => Ok(Value::Text(text.into())),
        AttrKind::Numeric => match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Value::Numeric(x)),
            _ => Err(format!("`{text}` is not a finite number")),
        },
        AttrKind::Nominal(labels) => labels
            .iter()
            .position(|l| l == text)
            .map(Value::Nominal)
            .ok_or_else(|| format!("unknown label `{text}` for `{}`", spec.name)),
    }
}

/// Formats a value for CSV output. Numbers use the shortest text that
/// parses back to the identical `f64`.
pub fn format_cell(value: &Value, spec: &AttributeSpec) -> String {
    match value {
        Value::Missing => String::new(),
        Value::Numeric(x) => format!("{x}"),
        Value::Nominal(i) => spec.labels().map(|l| l[*i].clone()).unwrap_or_default(),
        Value::Text(s) => s.clone(),
    }
}

/// Orders student ids as if left-padded with zeros to `width`.
pub fn compare_ids(a: &str, b: &str, width: usize) -> Ordering {
    let pad = |s: &str| width.saturating_sub(s.len());
    let (pa, pb) = (pad(a), pad(b));
    let ia = core::iter::repeat_n(b'0', pa).chain(a.bytes());
    let ib = core::iter::repeat_n(b'0', pb).chain(b.bytes());
    ia.cmp(ib)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    specs: Vec<AttributeSpec>,
    rows: Vec<Vec<Value>>,
}

impl DataTable {
    /// Builds a validated table.
    pub fn new(specs: Vec<AttributeSpec>, rows: Vec<Vec<Value>>) -> Result<Self> {
        validate_specs(&specs)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != specs.len() {
                return Err(Error::Parse {
                    row: r,
                    column: row.len().min(specs.len()),
                    message: format!("expected {} values, found {}", specs.len(), row.len()),
                });
            }
            for (c, (v, s)) in row.iter().zip(&specs).enumerate() {
                if !v.fits(&s.kind) {
                    return Err(Error::Parse {
                        row: r,
                        column: c,
                        message: format!("value {v:?} does not fit `{}`", s.name),
                    });
                }
            }
        }
        let table = DataTable { specs, rows };
        if let Some(id) = table.id_index() {
            let mut seen = BTreeSet::new();
            for row in &table.rows {
                if let Value::Text(s) = &row[id] {
                    if !seen.insert(s.as_str()) {
                        return Err(Error::DuplicateId(s.clone()));
                    }
                } else {
                    return Err(Error::InvalidSchema("id value missing".into()));
                }
            }
        }
        Ok(table)
    }

    pub fn specs(&self) -> &[AttributeSpec] {
        &self.specs
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.specs.len()
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn id_index(&self) -> Option<usize> {
        self.specs.iter().position(|s| s.role == Role::Id)
    }

    pub fn class_index(&self) -> Option<usize> {
        self.specs.iter().position(|s| s.role == Role::Class)
    }

    pub fn input_indices(&self) -> Vec<usize> {
        (0..self.specs.len()).filter(|&i| self.specs[i].role == Role::Input).collect()
    }

    pub fn class_labels(&self) -> Option<&[String]> {
        self.class_index().and_then(|c| self.specs[c].labels())
    }

    pub fn ids(&self) -> Vec<&str> {
        match self.id_index() {
            Some(c) => self
                .rows
                .iter()
                .map(|r| match &r[c] {
                    Value::Text(s) => s.as_str(),
                    _ => "",
                })
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &Value> + '_ {
        self.rows.iter().map(move |r| &r[col])
    }

    /// Class index per row (`None` when missing).
    pub fn class_column(&self) -> Result<Vec<Option<usize>>> {
        let c = self.class_index().ok_or(Error::MissingClass)?;
        Ok(self.column(c).map(Value::as_index).collect())
    }

    /// Keeps the listed columns, in the given order.
    pub fn project(&self, cols: &[usize]) -> Result<DataTable> {
        let specs = cols.iter().map(|&c| self.specs[c].clone()).collect();
        let rows = self.rows.iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect();
        DataTable::new(specs, rows)
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        DataTable { specs: self.specs.clone(), rows: rows.iter().map(|&r| self.rows[r].clone()).collect() }
    }

    /// Returns a copy whose rows are sorted by id (zero-padded comparison).
    pub fn sorted_by_id(&self) -> DataTable {
        if self.id_index().is_none() {
            return self.clone();
        }
        let ids = self.ids();
        let width = ids.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by(|&a, &b| compare_ids(ids[a], ids[b], width));
        self.select_rows(&order)
    }

    /// Replaces one column (spec and values) in a new table.
    pub fn with_column(&self, col: usize, spec: AttributeSpec, values: Vec<Value>) -> Result<DataTable> {
        if values.len() != self.rows.len() {
            return Err(Error::LengthMismatch { left: values.len(), right: self.rows.len() });
        }
        let mut specs = self.specs.clone();
        specs[col] = spec;
        let rows = self
            .rows
            .iter()
            .zip(values)
            .map(|(r, v)| {
                let mut r = r.clone();
                r[col] = v;
                r
            })
            .collect();
        DataTable::new(specs, rows)
    }
}

fn validate_specs(specs: &[AttributeSpec]) -> Result<()> {
    let mut names = BTreeSet::new();
    for s in specs {
        s.validate()?;
        if !names.insert(s.name.as_str()) {
            return Err(Error::InvalidSchema(format!("duplicate attribute `{}`", s.name)));
        }
    }
    let ids = specs.iter().filter(|s| s.role == Role::Id).count();
    let classes = specs.iter().filter(|s| s.role == Role::Class).count();
    if ids > 1 {
        return Err(Error::InvalidSchema("more than one id attribute".into()));
    }
    if classes > 1 {
        return Err(Error::InvalidSchema("more than one class attribute".into()));
    }
    Ok(())
}

/// The four data sources of the course, in canonical merge order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    Theory,
    Practice,
    Online,
    Exam,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::Theory, Source::Practice, Source::Online, Source::Exam];
    pub const INPUTS: [Source; 3] = [Source::Theory, Source::Practice, Source::Online];

    pub fn name(self) -> &'static str {
        match self {
            Source::Theory => "theory",
            Source::Practice => "practice",
            Source::Online => "online",
            Source::Exam => "exam",
        }
    }

    /// Heading used when rendering per-source models.
    pub fn title(self) -> &'static str {
        match self {
            Source::Theory => "Theory",
            Source::Practice => "Practice",
            Source::Online => "Moodle",
            Source::Exam => "Exam",
        }
    }

    pub fn parse(s: &str) -> Option<Source> {
        Source::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-source tables keyed by a shared student id column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceBundle {
    sources: BTreeMap<Source, DataTable>,
}

impl SourceBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tables(tables: impl IntoIterator<Item = (Source, DataTable)>) -> Self {
        SourceBundle { sources: tables.into_iter().collect() }
    }

    pub fn insert(&mut self, source: Source, table: DataTable) {
        self.sources.insert(source, table);
    }

    pub fn get(&self, source: Source) -> Option<&DataTable> {
        self.sources.get(&source)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Source, &DataTable)> {
        self.sources.iter().map(|(s, t)| (*s, t))
    }

    pub fn sources(&self) -> Vec<Source> {
        self.sources.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Checks that every table has an id column and all id sets agree.
    /// On failure lists the ids not present in every table.
    pub fn validate_ids(&self) -> Result<()> {
        let mut sets = Vec::new();
        for (s, t) in &self.sources {
            if t.id_index().is_none() {
                return Err(Error::InvalidSchema(format!("{s} table has no id attribute")));
            }
            sets.push(t.ids().into_iter().collect::<BTreeSet<&str>>());
        }
        let Some(first) = sets.first() else { return Ok(()) };
        let union: BTreeSet<&str> = sets.iter().flatten().copied().collect();
        if sets.iter().all(|s| s == first) {
            return Ok(());
        }
        let offending =
            union.into_iter().filter(|id| !sets.iter().all(|s| s.contains(id))).map(ToString::to_string).collect();
        Err(Error::IdMismatch(offending))
    }

    /// Applies `f` to every table.
    pub fn map_tables(&self, mut f: impl FnMut(Source, &DataTable) -> Result<DataTable>) -> Result<SourceBundle> {
        let mut out = SourceBundle::new();
        for (s, t) in &self.sources {
            out.insert(*s, f(*s, t)?);
        }
        Ok(out)
    }
}

/// Merges a bundle into one table with one row per student.
///
/// Columns are the id (unless `drop_id`), then every input column source
/// by source in canonical order, then the class column. Rows are sorted
/// by zero-padded id.
pub fn join_on_id(bundle: &SourceBundle, drop_id: bool) -> Result<DataTable> {
    bundle.validate_ids()?;
    let Some((_, first)) = bundle.iter().next() else {
        return Err(Error::InvalidSchema("empty bundle".into()));
    };
    let first = first.sorted_by_id();
    let ids: Vec<String> = first.ids().into_iter().map(String::from).collect();

    let mut specs = Vec::new();
    let id_col = first.id_index().expect("validated");
    if !drop_id {
        specs.push(first.specs()[id_col].clone());
    }
    let mut rows: Vec<Vec<Value>> =
        ids.iter().map(|id| if drop_id { Vec::new() } else { alloc::vec![Value::Text(id.clone())] }).collect();

    let mut class: Option<(AttributeSpec, Vec<Value>)> = None;
    for (source, table) in bundle.iter() {
        let table = table.sorted_by_id();
        let inputs = table.input_indices();
        for &c in &inputs {
            specs.push(table.specs()[c].clone());
        }
        for (out, row) in rows.iter_mut().zip(table.rows()) {
            out.extend(inputs.iter().map(|&c| row[c].clone()));
        }
        if let Some(c) = table.class_index() {
            if class.is_some() {
                return Err(Error::InvalidSchema(format!("second class attribute in {source} table")));
            }
            class = Some((table.specs()[c].clone(), table.column(c).cloned().collect()));
        }
    }
    if let Some((spec, values)) = class {
        specs.push(spec);
        for (row, v) in rows.iter_mut().zip(values) {
            row.push(v);
        }
    }
    DataTable::new(specs, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tbl(ids: &[&str], vals: &[f64], name: &str) -> DataTable {
        DataTable::new(
            vec![AttributeSpec::id("id"), AttributeSpec::numeric(name)],
            ids.iter().zip(vals).map(|(i, v)| vec![Value::Text((*i).into()), Value::Numeric(*v)]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn nominal_labels_must_be_unique_and_nonempty() {
        let bad = AttributeSpec::nominal("a", &["x", "x"]);
        assert!(matches!(DataTable::new(vec![bad], vec![]), Err(Error::InvalidSchema(_))));
        let empty = AttributeSpec::nominal("a", &[]);
        assert!(matches!(DataTable::new(vec![empty], vec![]), Err(Error::InvalidSchema(_))));
    }

    #[test]
    fn one_id_at_most_one_class() {
        let specs = vec![AttributeSpec::id("a"), AttributeSpec::id("b")];
        assert!(DataTable::new(specs, vec![]).is_err());
        let c = AttributeSpec::nominal("c", &["x"]).with_role(Role::Class);
        let specs = vec![AttributeSpec::id("a"), c.clone(), AttributeSpec { name: "d".into(), ..c }];
        assert!(DataTable::new(specs, vec![]).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = DataTable::new(
            vec![AttributeSpec::id("id")],
            vec![vec![Value::Text("1".into())], vec![Value::Text("1".into())]],
        );
        assert_eq!(r, Err(Error::DuplicateId("1".into())));
    }

    #[test]
    fn nominal_index_out_of_bounds_rejected() {
        let r = DataTable::new(vec![AttributeSpec::nominal("a", &["x", "y"])], vec![vec![Value::Nominal(2)]]);
        assert!(matches!(r, Err(Error::Parse { row: 0, column: 0, .. })));
    }

    #[test]
    fn parse_cell_variants() {
        let nom = AttributeSpec::nominal("q", &["Low", "Medium", "High"]);
        assert_eq!(parse_cell("High", &nom), Ok(Value::Nominal(2)));
        assert_eq!(parse_cell("", &nom), Ok(Value::Missing));
        assert!(parse_cell("abc", &AttributeSpec::numeric("x")).is_err());
        assert!(parse_cell("nan", &AttributeSpec::numeric("x")).is_err());
    }

    #[test]
    fn padded_id_order() {
        assert_eq!(compare_ids("9", "10", 2), Ordering::Less);
        assert_eq!(compare_ids("10", "9", 2), Ordering::Greater);
        assert_eq!(compare_ids("007", "7", 3), Ordering::Equal);
    }

    #[test]
    fn join_orders_sources_and_sorts_ids() {
        let mut b = SourceBundle::new();
        b.insert(Source::Online, tbl(&["10", "9"], &[1.0, 2.0], "o"));
        b.insert(Source::Theory, tbl(&["9", "10"], &[3.0, 4.0], "t"));
        let j = join_on_id(&b, false).unwrap();
        assert_eq!(j.specs().iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), ["id", "t", "o"]);
        assert_eq!(j.ids(), ["9", "10"]);
        assert_eq!(j.rows()[0][1], Value::Numeric(3.0));
        assert_eq!(j.rows()[0][2], Value::Numeric(2.0));
        let d = join_on_id(&b, true).unwrap();
        assert_eq!(d.n_cols(), 2);
    }

    #[test]
    fn join_single_source_is_identity() {
        let t = tbl(&["1", "2", "3"], &[0.5, 0.25, 1.0], "x");
        let b = SourceBundle::from_tables([(Source::Theory, t.clone())]);
        assert_eq!(join_on_id(&b, false).unwrap(), t);
    }

    #[test]
    fn join_reports_missing_ids() {
        let mut b = SourceBundle::new();
        b.insert(Source::Theory, tbl(&["1", "2", "3"], &[0.0; 3], "t"));
        b.insert(Source::Exam, tbl(&["1", "2"], &[0.0; 2], "e"));
        assert_eq!(join_on_id(&b, true), Err(Error::IdMismatch(vec!["3".into()])));
    }
}
