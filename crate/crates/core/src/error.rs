use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Header or attribute list disagrees with the expected schema.
    SchemaMismatch(String),
    /// Row and column are zero-based data coordinates (header excluded).
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    DuplicateId(String),
    IdMismatch(Vec<String>),
    InvalidSchema(String),
    EmptyColumn,
    OutOfRangeScore(f64),
    MixedKindGroup(String),
    LengthMismatch {
        left: usize,
        right: usize,
    },
    EmptySubset,
    UnknownAttribute(String),
    InvalidParams(String),
    TooFewRows(String),
    SingleClassTruth,
    InfeasibleRuleset(String),
    Syntax {
        line: usize,
        message: String,
    },
    MissingClass,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SchemaMismatch(m) => write!(f, "schema mismatch: {m}"),
            Error::Parse { row, column, message } => {
                write!(f, "parse error at row {row}, column {column}: {message}")
            }
            Error::DuplicateId(id) => write!(f, "duplicate id `{id}`"),
            Error::IdMismatch(ids) => write!(f, "id sets differ across sources: {}", ids.join(", ")),
            Error::InvalidSchema(m) => write!(f, "invalid schema: {m}"),
            Error::EmptyColumn => f.write_str("column has no non-missing values"),
            Error::OutOfRangeScore(s) => write!(f, "exam score {s} outside [0, 10]"),
            Error::MixedKindGroup(g) => write!(f, "session group `{g}` mixes attribute kinds"),
            Error::LengthMismatch { left, right } => write!(f, "length mismatch: {left} vs {right}"),
            Error::EmptySubset => f.write_str("attribute subset is empty"),
            Error::UnknownAttribute(a) => write!(f, "unknown attribute `{a}`"),
            Error::InvalidParams(m) => write!(f, "invalid parameters: {m}"),
            Error::TooFewRows(m) => write!(f, "too few rows: {m}"),
            Error::SingleClassTruth => f.write_str("AUC undefined: truth contains a single class"),
            Error::InfeasibleRuleset(m) => write!(f, "infeasible ruleset: {m}"),
            Error::Syntax { line, message } => write!(f, "syntax error on line {line}: {message}"),
            Error::MissingClass => f.write_str("dataset has no class attribute"),
        }
    }
}

impl core::error::Error for Error {}
