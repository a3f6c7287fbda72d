//! Run configuration: a JSON file whose fields mirror the command-line
//! flags. Flags given on the command line override the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use fusemine_core::ensemble::Approach;
use fusemine_core::eval::{CvConfig, GridConfig};
use fusemine_core::preprocess::{PreprocessConfig, Variant};
use fusemine_core::{Algorithm, LearnerParams, Source};
use serde::{Deserialize, Serialize};

/// Feature-selection override for the approach list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    Cfs,
    None,
}

impl SelectMode {
    pub fn parse(s: &str) -> Result<SelectMode> {
        match s.to_ascii_lowercase().as_str() {
            "cfs" => Ok(SelectMode::Cfs),
            "none" => Ok(SelectMode::None),
            _ => bail!("unknown selection `{s}` (expected cfs or none)"),
        }
    }

    /// Maps an approach to its selecting or non-selecting counterpart.
    pub fn apply(self, approach: Approach) -> Approach {
        match (self, approach) {
            (SelectMode::Cfs, Approach::MergeAll) => Approach::SelectBest,
            (SelectMode::Cfs, Approach::Ensemble) => Approach::EnsembleSelect,
            (SelectMode::None, Approach::SelectBest) => Approach::MergeAll,
            (SelectMode::None, Approach::EnsembleSelect) => Approach::Ensemble,
            (_, a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Raw bundle directory (four source CSVs and an optional schema).
    pub input: Option<PathBuf>,
    /// Preprocessed directory written by `preprocess`.
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub k: usize,
    /// `all` or a comma list of merge, select, ensemble, ensemble-select.
    pub approach: String,
    /// `all` or a comma list of algorithm tags.
    pub algorithm: String,
    /// `both`, `numeric` or `discretized`.
    pub variant: String,
    /// Theory, Practice and Online vote weights.
    pub weights: Vec<f64>,
    pub weight_search: bool,
    pub weight_grid: Vec<f64>,
    pub select: Option<SelectMode>,
    pub anonymize: bool,
    pub fold_local_refit: bool,
    pub mean_of_folds: bool,
    pub preprocess: PreprocessConfig,
    pub params: LearnerParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            data: None,
            out: None,
            seed: 1,
            k: 10,
            approach: "all".into(),
            algorithm: "all".into(),
            variant: "both".into(),
            weights: vec![1.0, 1.0, 2.0],
            weight_search: false,
            weight_grid: vec![1.0, 2.0],
            select: None,
            anonymize: true,
            fold_local_refit: false,
            mean_of_folds: false,
            preprocess: PreprocessConfig::default(),
            params: LearnerParams::default(),
        }
    }
}

fn split(list: &str) -> impl Iterator<Item = &str> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn approaches(&self) -> Result<Vec<Approach>> {
        let mut out: Vec<Approach> = if self.approach.eq_ignore_ascii_case("all") {
            Approach::ALL.to_vec()
        } else {
            split(&self.approach)
                .map(|s| Approach::parse(s).with_context(|| format!("unknown approach `{s}`")))
                .collect::<Result<_>>()?
        };
        if let Some(mode) = self.select {
            out = out.into_iter().map(|a| mode.apply(a)).collect();
            out.dedup();
        }
        ensure!(!out.is_empty(), "no approach selected");
        Ok(out)
    }

    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        let out: Vec<Algorithm> = if self.algorithm.eq_ignore_ascii_case("all") {
            Algorithm::ALL.to_vec()
        } else {
            split(&self.algorithm)
                .map(|s| Algorithm::parse(s).with_context(|| format!("unknown algorithm `{s}`")))
                .collect::<Result<_>>()?
        };
        ensure!(!out.is_empty(), "no algorithm selected");
        Ok(out)
    }

    pub fn variants(&self) -> Result<Vec<Variant>> {
        if self.variant.eq_ignore_ascii_case("both") {
            return Ok(Variant::ALL.to_vec());
        }
        let out: Vec<Variant> = split(&self.variant)
            .map(|s| Variant::parse(&s.to_ascii_lowercase()).with_context(|| format!("unknown variant `{s}`")))
            .collect::<Result<_>>()?;
        ensure!(!out.is_empty(), "no variant selected");
        Ok(out)
    }

    pub fn weight_map(&self) -> Result<BTreeMap<Source, f64>> {
        ensure!(
            self.weights.len() == Source::INPUTS.len(),
            "expected {} weights (theory, practice, online), got {}",
            Source::INPUTS.len(),
            self.weights.len()
        );
        Ok(Source::INPUTS.into_iter().zip(self.weights.iter().copied()).collect())
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.k >= 2, "k must be at least 2, got {}", self.k);
        for (name, path) in [("input", &self.input), ("data", &self.data)] {
            if let Some(p) = path {
                ensure!(p.is_dir(), "{name} directory {} does not exist", p.display());
            }
        }
        self.approaches()?;
        let algorithms = self.algorithms()?;
        self.variants()?;
        let weights = self.weight_map()?;
        ensure!(weights.values().all(|w| w.is_finite() && *w > 0.0), "weights must be finite and positive");
        ensure!(
            !self.weight_grid.is_empty() && self.weight_grid.iter().all(|w| w.is_finite() && *w > 0.0),
            "weight grid must hold positive values"
        );
        for a in algorithms {
            self.params.validate(a)?;
        }
        Ok(())
    }

    pub fn cv(&self) -> CvConfig {
        CvConfig {
            k: self.k,
            seed: self.seed,
            fold_local_refit: self.fold_local_refit,
            mean_of_folds: self.mean_of_folds,
            binning: self.preprocess.binning(),
        }
    }

    pub fn grid(&self) -> Result<GridConfig> {
        Ok(GridConfig {
            approaches: self.approaches()?,
            variants: self.variants()?,
            algorithms: self.algorithms()?,
            weights: self.weight_map()?,
            weight_grid: self.weight_search.then(|| self.weight_grid.clone()),
            params: self.params.clone(),
            cv: self.cv(),
        })
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig { seed: self.seed, fold_local_refit: self.fold_local_refit, ..self.preprocess.clone() }
    }
}

/// Parses `1,1,2` style weight lists.
pub fn parse_weights(s: &str) -> Result<Vec<f64>> {
    split(s).map(|w| w.parse::<f64>().with_context(|| format!("bad weight `{w}`"))).collect()
}
