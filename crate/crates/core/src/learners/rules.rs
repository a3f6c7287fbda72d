//! Ordered IF-THEN rule lists: matching, rendering and parsing.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::data::{laplace, Feat};
use crate::error::{Error, Result};
use crate::math;
use crate::table::{AttrKind, AttributeSpec, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Condition {
    /// Nominal equality; `value == n_labels` tests for missing.
    Eq {
        attr: usize,
        value: usize,
    },
    Le {
        attr: usize,
        threshold: f64,
    },
    Gt {
        attr: usize,
        threshold: f64,
    },
}

impl Condition {
    pub fn attr(&self) -> usize {
        match *self {
            Condition::Eq { attr, .. } | Condition::Le { attr, .. } | Condition::Gt { attr, .. } => attr,
        }
    }

    pub(crate) fn matches(&self, x: &[Feat]) -> bool {
        match *self {
            Condition::Eq { attr, value } => x[attr].nom() == value,
            Condition::Le { attr, threshold } => x[attr].num() <= threshold,
            Condition::Gt { attr, threshold } => x[attr].num() > threshold,
        }
    }

    pub fn render(&self, attrs: &[AttributeSpec]) -> String {
        match *self {
            Condition::Eq { attr, value } => {
                let label = match &attrs[attr].kind {
                    AttrKind::Nominal(l) if value < l.len() => l[value].as_str(),
                    _ => "?",
                };
                format!("{} = {}", attrs[attr].name, label)
            }
            Condition::Le { attr, threshold } => format!("{} <= {}", attrs[attr].name, threshold),
            Condition::Gt { attr, threshold } => format!("{} > {}", attrs[attr].name, threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub class: usize,
    /// Class counts of the training instances the rule covered.
    pub counts: Vec<f64>,
}

impl Rule {
    pub(crate) fn matches(&self, x: &[Feat]) -> bool {
        self.conditions.iter().all(|c| c.matches(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleList {
    pub rules: Vec<Rule>,
    pub default_class: usize,
    pub default_counts: Vec<f64>,
}

/// Laplace estimate of rule counts. Rules without coverage counts (e.g.
/// parsed from text), or whose counts would predict a class other than
/// the one the rule states, count one instance of their own class, so
/// the prediction always matches the rendered rule.
fn rule_distribution(counts: &[f64], class: usize, n_classes: usize) -> Vec<f64> {
    let usable = counts.len() == n_classes && counts.iter().sum::<f64>() > 0.0;
    if usable && math::argmax(&laplace(counts)) == class {
        laplace(counts)
    } else {
        let mut c = vec![0.0; n_classes];
        c[class] = 1.0;
        laplace(&c)
    }
}

impl RuleList {
    /// Index of the first rule that fires; `None` means the default.
    pub(crate) fn fire(&self, x: &[Feat]) -> Option<usize> {
        self.rules.iter().position(|r| r.matches(x))
    }

    pub(crate) fn distribution(&self, x: &[Feat], n_classes: usize) -> Vec<f64> {
        match self.fire(x) {
            Some(i) => rule_distribution(&self.rules[i].counts, self.rules[i].class, n_classes),
            None => rule_distribution(&self.default_counts, self.default_class, n_classes),
        }
    }

    /// Number of rules including the default.
    pub fn len(&self) -> usize {
        self.rules.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn render_rule(&self, i: Option<usize>, attrs: &[AttributeSpec], labels: &[String]) -> String {
        match i {
            Some(i) => {
                let r = &self.rules[i];
                let conds: Vec<String> = r.conditions.iter().map(|c| c.render(attrs)).collect();
                format!("IF {} THEN {}", conds.join(" AND "), labels[r.class])
            }
            None => format!("ELSE {}", labels[self.default_class]),
        }
    }

    pub fn render(&self, attrs: &[AttributeSpec], labels: &[String]) -> String {
        let mut out = String::new();
        for i in 0..self.rules.len() {
            let _ = writeln!(out, "{}", self.render_rule(Some(i), attrs, labels));
        }
        let _ = writeln!(out, "{}", self.render_rule(None, attrs, labels));
        let _ = writeln!(out, "Number of Rules : {}", self.len());
        out
    }
}

/// A parsed rule list together with the schema it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRules {
    pub attributes: Vec<AttributeSpec>,
    pub class: AttributeSpec,
    pub rules: RuleList,
}

enum RawCond {
    Eq(String, String),
    Le(String, f64),
    Gt(String, f64),
}

impl RawCond {
    fn name(&self) -> &str {
        match self {
            RawCond::Eq(n, _) | RawCond::Le(n, _) | RawCond::Gt(n, _) => n,
        }
    }
}

struct RawRule {
    line: usize,
    conds: Vec<RawCond>,
    class: String,
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line, message: message.into() }
}

fn parse_condition(text: &str, line: usize) -> Result<RawCond> {
    let text = text.trim();
    let text = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(text).trim();
    for (op, ctor) in [(" <= ", 0u8), (" > ", 1), (" = ", 2)] {
        if let Some((name, value)) = text.split_once(op) {
            let (name, value) = (name.trim(), value.trim());
            if name.is_empty() || value.is_empty() {
                return Err(syntax(line, format!("incomplete condition `{text}`")));
            }
            return Ok(match ctor {
                2 => RawCond::Eq(name.into(), value.into()),
                _ => {
                    let t: f64 = value.parse().map_err(|_| syntax(line, format!("bad threshold `{value}`")))?;
                    if ctor == 0 {
                        RawCond::Le(name.into(), t)
                    } else {
                        RawCond::Gt(name.into(), t)
                    }
                }
            });
        }
    }
    Err(syntax(line, format!("unrecognized condition `{text}`")))
}

fn split_and(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut rest = text;
    loop {
        let cut = [" AND ", " and "].iter().filter_map(|sep| rest.find(sep).map(|p| (p, sep.len()))).min();
        match cut {
            Some((p, len)) => {
                parts.push(&rest[..p]);
                rest = &rest[p + len..];
            }
            None => {
                parts.push(rest);
                return parts;
            }
        }
    }
}

fn parse_lines(text: &str) -> Result<(Vec<RawRule>, String)> {
    let mut rules = Vec::new();
    let mut default: Option<(usize, String)> = None;
    let mut footer: Option<(usize, usize)> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if footer.is_some() {
            return Err(syntax(line, "text after the rule count footer"));
        }
        if let Some(n) = l.strip_prefix("Number of Rules") {
            let n = n.trim_start().strip_prefix(':').ok_or_else(|| syntax(line, "expected `:`"))?;
            let n: usize = n.trim().parse().map_err(|_| syntax(line, "bad rule count"))?;
            footer = Some((line, n));
            continue;
        }
        if default.is_some() {
            return Err(syntax(line, "rule after the default rule"));
        }
        if let Some(class) = l.strip_prefix("ELSE ") {
            let class = class.trim();
            if class.is_empty() {
                return Err(syntax(line, "default rule without class"));
            }
            default = Some((line, class.into()));
        } else if let Some(body) = l.strip_prefix("IF ") {
            let (ante, class) = body.rsplit_once(" THEN ").ok_or_else(|| syntax(line, "missing THEN"))?;
            let class = class.trim();
            if class.is_empty() {
                return Err(syntax(line, "missing class after THEN"));
            }
            let conds = split_and(ante).into_iter().map(|c| parse_condition(c, line)).collect::<Result<_>>()?;
            rules.push(RawRule { line, conds, class: class.into() });
        } else {
            return Err(syntax(line, format!("expected IF, ELSE or rule count, found `{l}`")));
        }
    }
    let (_, default) = default.ok_or_else(|| syntax(last_line.max(1), "missing default (ELSE) rule"))?;
    if let Some((line, n)) = footer {
        if n != rules.len() + 1 {
            return Err(syntax(line, format!("footer says {n} rules, found {}", rules.len() + 1)));
        }
    }
    Ok((rules, default))
}

fn build(raw: Vec<RawRule>, default: &str, attrs: &[AttributeSpec], class: &AttributeSpec) -> Result<RuleList> {
    let labels = class.labels().ok_or_else(|| Error::InvalidSchema("class must be nominal".into()))?;
    let class_of = |name: &str, line: usize| {
        labels.iter().position(|l| l == name).ok_or_else(|| syntax(line, format!("unknown class `{name}`")))
    };
    let mut rules = Vec::new();
    for r in raw {
        let mut conditions = Vec::new();
        for c in &r.conds {
            let attr = attrs
                .iter()
                .position(|a| a.name == c.name())
                .ok_or_else(|| syntax(r.line, format!("unknown attribute `{}`", c.name())))?;
            conditions.push(match (c, &attrs[attr].kind) {
                (RawCond::Eq(_, v), AttrKind::Nominal(l)) => {
                    let value = if v == "?" {
                        l.len()
                    } else {
                        l.iter().position(|x| x == v).ok_or_else(|| syntax(r.line, format!("unknown label `{v}`")))?
                    };
                    Condition::Eq { attr, value }
                }
                (RawCond::Le(_, t), AttrKind::Numeric) => Condition::Le { attr, threshold: *t },
                (RawCond::Gt(_, t), AttrKind::Numeric) => Condition::Gt { attr, threshold: *t },
                _ => return Err(syntax(r.line, format!("operator does not fit attribute `{}`", c.name()))),
            });
        }
        rules.push(Rule { conditions, class: class_of(&r.class, r.line)?, counts: Vec::new() });
    }
    Ok(RuleList { rules, default_class: class_of(default, 0)?, default_counts: Vec::new() })
}

/// Parses rule text against a known schema.
pub fn parse_rules_with(text: &str, attrs: &[AttributeSpec], class: &AttributeSpec) -> Result<RuleList> {
    let (raw, default) = parse_lines(text)?;
    build(raw, &default, attrs, class)
}

/// Parses rule text, inferring the schema from the text itself:
/// attributes and labels in order of first appearance, `<=`/`>`
/// comparisons marking numeric attributes.
pub fn parse_rules(text: &str) -> Result<ParsedRules> {
    let (raw, default) = parse_lines(text)?;
    let mut attrs: Vec<AttributeSpec> = Vec::new();
    let mut class_labels: Vec<String> = Vec::new();
    for r in &raw {
        for c in &r.conds {
            let pos = match attrs.iter().position(|a| a.name == c.name()) {
                Some(p) => p,
                None => {
                    let kind = match c {
                        RawCond::Eq(..) => AttrKind::Nominal(Vec::new()),
                        _ => AttrKind::Numeric,
                    };
                    attrs.push(AttributeSpec { name: c.name().into(), kind, role: Role::Input });
                    attrs.len() - 1
                }
            };
            match (c, &mut attrs[pos].kind) {
                (RawCond::Eq(_, v), AttrKind::Nominal(labels)) => {
                    if v != "?" && !labels.contains(v) {
                        labels.push(v.clone());
                    }
                }
                (RawCond::Eq(..), _) | (_, AttrKind::Nominal(_)) => {
                    return Err(syntax(r.line, format!("`{}` used as both nominal and numeric", c.name())));
                }
                _ => {}
            }
        }
        if !class_labels.contains(&r.class) {
            class_labels.push(r.class.clone());
        }
    }
    if !class_labels.contains(&default) {
        class_labels.push(default.clone());
    }
    for a in &mut attrs {
        if let AttrKind::Nominal(l) = &mut a.kind {
            if l.is_empty() {
                l.push("?".to_string());
            }
        }
    }
    let class = AttributeSpec {
        name: String::from(crate::preprocess::CLASS_NAME),
        kind: AttrKind::Nominal(class_labels),
        role: Role::Class,
    };
    let rules = build(raw, &default, &attrs, &class)?;
    Ok(ParsedRules { attributes: attrs, class, rules })
}
