//! Multi-source student performance prediction.
//!
//! The crate covers the whole modelling side of the pipeline: a typed
//! tabular model, preprocessing and per-session fusion, correlation-based
//! feature selection, six white-box classifiers, the weighted Vote
//! combiner used for decision-level fusion, stratified cross-validation
//! and a seeded synthetic cohort generator. Everything here is pure and
//! allocation-only; file formats and the command line live in the
//! `fusemine` crate.

#![no_std]

extern crate alloc;

pub mod ensemble;
pub mod error;
pub mod eval;
pub mod learners;
mod math;
pub mod preprocess;
pub mod rng;
pub mod select;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
pub use learners::{Algorithm, LearnerParams, Model};
pub use table::{AttrKind, AttributeSpec, DataTable, Role, Source, SourceBundle, Value};
