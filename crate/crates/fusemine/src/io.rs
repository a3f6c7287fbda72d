//! CSV tables, schema files and atomic writes.
//!
//! A bundle directory holds one CSV per source (`theory.csv`,
//! `practice.csv`, `online.csv`, `exam.csv`) and a `schema.json` that
//! types every column. Without a schema, columns are inferred: the first
//! column is the id, columns whose cells all parse as numbers are
//! numeric and the rest nominal with labels in order of appearance.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fusemine_core::table::{format_cell, parse_cell};
use fusemine_core::{AttrKind, AttributeSpec, DataTable, Role, Source, SourceBundle, Value};
use serde::{Deserialize, Serialize};

pub const SCHEMA_FILE: &str = "schema.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Text,
    Numeric,
    Nominal,
}

/// One column as stored in `schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default = "input_role")]
    pub role: Role,
}

fn input_role() -> Role {
    Role::Input
}

impl From<&AttributeSpec> for ColumnSchema {
    fn from(spec: &AttributeSpec) -> Self {
        let (kind, labels) = match &spec.kind {
            AttrKind::Text => (ColumnKind::Text, None),
            AttrKind::Numeric => (ColumnKind::Numeric, None),
            AttrKind::Nominal(l) => (ColumnKind::Nominal, Some(l.clone())),
        };
        ColumnSchema { name: spec.name.clone(), kind, labels, role: spec.role }
    }
}

impl ColumnSchema {
    pub fn to_spec(&self) -> Result<AttributeSpec> {
        let kind = match (self.kind, &self.labels) {
            _ if self.role == Role::Id => AttrKind::Text,
            (ColumnKind::Text, _) => AttrKind::Text,
            (ColumnKind::Numeric, _) => AttrKind::Numeric,
            (ColumnKind::Nominal, Some(l)) => AttrKind::Nominal(l.clone()),
            (ColumnKind::Nominal, None) => bail!("nominal column `{}` has no labels", self.name),
        };
        Ok(AttributeSpec { name: self.name.clone(), kind, role: self.role })
    }
}

/// Column schemas per source, keyed by source name.
pub type BundleSchema = BTreeMap<String, Vec<ColumnSchema>>;

pub fn schema_of(bundle: &SourceBundle) -> BundleSchema {
    bundle.iter().map(|(s, t)| (s.name().to_string(), t.specs().iter().map(ColumnSchema::from).collect())).collect()
}

/// Writes `bytes` to a temporary sibling file, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn table_to_csv(table: &DataTable) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(table.specs().iter().map(|s| s.name.as_str()))?;
    for row in table.rows() {
        w.write_record(row.iter().zip(table.specs()).map(|(v, s)| format_cell(v, s)))?;
    }
    Ok(w.into_inner()?)
}

pub fn save_csv(path: &Path, table: &DataTable) -> Result<()> {
    write_atomic(path, &table_to_csv(table)?)
}

fn read_records(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let records = r
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("reading {}", path.display()))?;
    Ok((header, records))
}

/// Loads a CSV whose header names every column of `specs`, in any order.
pub fn load_csv(path: &Path, specs: &[AttributeSpec]) -> Result<DataTable> {
    let (header, records) = read_records(path)?;
    let positions = specs
        .iter()
        .map(|s| {
            header
                .iter()
                .position(|h| *h == s.name)
                .with_context(|| format!("{}: missing column `{}`", path.display(), s.name))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        let row = specs
            .iter()
            .zip(&positions)
            .map(|(s, &p)| {
                parse_cell(rec.get(p).unwrap_or(""), s)
                    .map_err(|m| anyhow::anyhow!("{} row {} column `{}`: {m}", path.display(), r + 1, s.name))
            })
            .collect::<Result<Vec<Value>>>()?;
        rows.push(row);
    }
    Ok(DataTable::new(specs.to_vec(), rows)?)
}

/// Guesses column types for a CSV without a schema.
pub fn infer_specs(path: &Path, source: Source) -> Result<Vec<AttributeSpec>> {
    let (header, records) = read_records(path)?;
    let mut specs = Vec::with_capacity(header.len());
    for (c, name) in header.iter().enumerate() {
        if c == 0 {
            specs.push(AttributeSpec::id(name));
            continue;
        }
        let cells: Vec<&str> = records.iter().map(|r| r.get(c).unwrap_or("")).filter(|s| !s.is_empty()).collect();
        let numeric = cells.iter().all(|s| s.parse::<f64>().is_ok_and(f64::is_finite));
        let mut spec = if numeric {
            AttributeSpec::numeric(name)
        } else {
            let mut labels: Vec<&str> = Vec::new();
            for s in &cells {
                if !labels.contains(s) {
                    labels.push(s);
                }
            }
            AttributeSpec::nominal(name, &labels)
        };
        if source == Source::Exam && !numeric && name == fusemine_core::preprocess::CLASS_NAME {
            spec = spec.with_role(Role::Class);
        }
        specs.push(spec);
    }
    Ok(specs)
}

pub fn csv_path(dir: &Path, source: Source) -> PathBuf {
    dir.join(format!("{}.csv", source.name()))
}

/// Loads all four source tables of a bundle directory.
pub fn load_bundle(dir: &Path) -> Result<SourceBundle> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let schema_path = dir.join(SCHEMA_FILE);
    let schema: Option<BundleSchema> = if schema_path.exists() { Some(read_json(&schema_path)?) } else { None };
    let mut bundle = SourceBundle::new();
    for source in Source::ALL {
        let path = csv_path(dir, source);
        if !path.exists() {
            bail!("missing {} table: {}", source, path.display());
        }
        let specs = match schema.as_ref().and_then(|s| s.get(source.name())) {
            Some(cols) => cols.iter().map(ColumnSchema::to_spec).collect::<Result<Vec<_>>>()?,
            None => infer_specs(&path, source)?,
        };
        bundle.insert(source, load_csv(&path, &specs)?);
    }
    bundle.validate_ids()?;
    Ok(bundle)
}

pub fn save_bundle(dir: &Path, bundle: &SourceBundle) -> Result<()> {
    for (source, table) in bundle.iter() {
        save_csv(&csv_path(dir, source), table)?;
    }
    write_json(&dir.join(SCHEMA_FILE), &schema_of(bundle))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let specs =
            vec![AttributeSpec::id("Id"), AttributeSpec::numeric("x"), AttributeSpec::nominal("y", &["Low", "High"])];
        let rows = vec![
            vec![Value::Text("S1".into()), Value::Numeric(0.1 + 0.2), Value::Nominal(1)],
            vec![Value::Text("S2".into()), Value::Missing, Value::Missing],
        ];
        let t = DataTable::new(specs.clone(), rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        save_csv(&p, &t).unwrap();
        assert_eq!(load_csv(&p, &specs).unwrap(), t);
    }

    #[test]
    fn schema_round_trip() {
        let spec = AttributeSpec::nominal("Class", &["Pass", "Fail"]).with_role(Role::Class);
        let col = ColumnSchema::from(&spec);
        let back: ColumnSchema = serde_json::from_str(&serde_json::to_string(&col).unwrap()).unwrap();
        assert_eq!(back.to_spec().unwrap(), spec);
    }
}
