//! Parallel experiment grid and the preprocessed directory layout.

use std::path::Path;

use anyhow::{Context, Result};
use fusemine_core::eval::{self, GridConfig, GridReport};
use fusemine_core::preprocess::{FittedParams, Preprocessed, Variant};
use rayon::prelude::*;

use crate::io;

pub const FUSED_DIR: &str = "fused";
pub const PARAMS_FILE: &str = "params.json";
pub const THREADS_ENV: &str = "FUSEMINE_THREADS";

pub fn save_preprocessed(dir: &Path, pre: &Preprocessed) -> Result<()> {
    io::save_bundle(&dir.join(FUSED_DIR), &pre.fused)?;
    for v in Variant::ALL {
        io::save_bundle(&dir.join(v.name()), pre.variant(v))?;
    }
    io::write_json(&dir.join(PARAMS_FILE), &pre.params)
}

pub fn load_preprocessed(dir: &Path) -> Result<Preprocessed> {
    let load = |name: &str| io::load_bundle(&dir.join(name)).with_context(|| format!("loading {}", dir.display()));
    let params: FittedParams = io::read_json(&dir.join(PARAMS_FILE))?;
    Ok(Preprocessed {
        fused: load(FUSED_DIR)?,
        numeric: load(Variant::Numeric.name())?,
        discretized: load(Variant::Discretized.name())?,
        params,
    })
}

/// Runs every cell of the grid on the rayon pool. Results are collected
/// in cell order, so the report does not depend on scheduling.
pub fn run_grid(pre: &Preprocessed, config: &GridConfig) -> fusemine_core::Result<GridReport> {
    let results = eval::grid_cells(config)
        .into_par_iter()
        .map(|cell| eval::evaluate_cell(pre, config, cell))
        .collect::<fusemine_core::Result<Vec<_>>>()?;
    Ok(GridReport::assemble(config, results))
}

/// Sizes the global pool from `FUSEMINE_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV} must be a positive integer"))?;
        anyhow::ensure!(n > 0, "{THREADS_ENV} must be a positive integer");
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
