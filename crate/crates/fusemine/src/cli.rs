//! Subcommands of the `fusemine` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail};
use clap::{Args, Parser, Subcommand};
use fusemine_core::ensemble::{self, Approach, FusionConfig, FusionModel};
use fusemine_core::eval::{self, Cell};
use fusemine_core::preprocess::{self, Variant};
use fusemine_core::synth::{self, CohortSpec};
use fusemine_core::table::join_on_id;
use fusemine_core::{select, Algorithm, DataTable, Source};
use serde::{Deserialize, Serialize};

use crate::config::{parse_weights, RunConfig, SelectMode};
use crate::error::{Classify, CliError, CliResult};
use crate::experiment;
use crate::io;

#[derive(Debug, Parser)]
#[command(name = "fusemine", version, about = "Multi-source student performance prediction with white-box models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort with planted rules.
    Synth(SynthArgs),
    /// Anonymize, fuse sessions, normalize and discretize a raw bundle.
    Preprocess(RunArgs),
    /// Print the CFS-selected attributes as a JSON list.
    Select(SelectArgs),
    /// Train one model on all students and save it.
    Train(RunArgs),
    /// Cross-validate the requested cells and print the results.
    Eval(RunArgs),
    /// Run the experiment grid and write report files.
    Experiment(RunArgs),
    /// Print a saved model as IF-THEN rules.
    Explain(ExplainArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 57)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Fraction of students whose labels are rotated.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Raw bundle directory (preprocess).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Preprocessed directory (train, eval, experiment).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// all, or a comma list of merge, select, ensemble, ensemble-select.
    #[arg(long)]
    pub approach: Option<String>,
    /// all, or a comma list of c45, reptree, randomtree, ripper, part, nnge.
    #[arg(long)]
    pub algorithm: Option<String>,
    /// both, numeric or discretized.
    #[arg(long)]
    pub variant: Option<String>,
    /// Theory, Practice and Online vote weights, e.g. 1,1,2.
    #[arg(long)]
    pub weights: Option<String>,
    /// Choose vote weights by cross-validation.
    #[arg(long)]
    pub weight_search: bool,
    /// cfs or none; switches approaches to their selecting counterpart.
    #[arg(long)]
    pub select: Option<String>,
    /// Keep the original student ids (preprocess).
    #[arg(long)]
    pub keep_ids: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "discretized")]
    pub variant: String,
    /// Restrict selection to one source (theory, practice, online).
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Student id, or zero-based row of the id-sorted data.
    #[arg(long, requires = "data")]
    pub student: Option<String>,
    /// Preprocessed directory the student is looked up in.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

/// A trained model with the settings needed to apply it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub approach: Approach,
    pub variant: Variant,
    pub algorithm: Option<Algorithm>,
    pub seed: u64,
    pub model: FusionModel,
}

impl RunArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p).input()?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.input {
            c.input = Some(v.clone());
        }
        if let Some(v) = &self.data {
            c.data = Some(v.clone());
        }
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = &self.approach {
            c.approach = v.clone();
        }
        if let Some(v) = &self.algorithm {
            c.algorithm = v.clone();
        }
        if let Some(v) = &self.variant {
            c.variant = v.clone();
        }
        if let Some(v) = &self.weights {
            c.weights = parse_weights(v).input()?;
        }
        if self.weight_search {
            c.weight_search = true;
        }
        if let Some(v) = &self.select {
            c.select = Some(SelectMode::parse(v).input()?);
        }
        if self.keep_ids {
            c.anonymize = false;
        }
        c.validate().input()?;
        Ok(c)
    }
}

fn need<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Input(anyhow!("--{flag} is required")))
}

fn single<T: Copy + std::fmt::Debug>(items: Vec<T>, what: &str) -> CliResult<T> {
    match items[..] {
        [one] => Ok(one),
        _ => Err(CliError::Input(anyhow!("{what} needs exactly one value, got {items:?}"))),
    }
}

/// Parses `args` and runs the command, writing normal output to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => return say(out, &e.to_string()),
        Err(e) => return Err(CliError::Input(anyhow!(e.to_string()))),
    };
    execute(cli.command, out)
}

pub fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    experiment::init_threads().input()?;
    match command {
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Preprocess(a) => cmd_preprocess(&a.resolve()?, out),
        Command::Select(a) => cmd_select(&a, out),
        Command::Train(a) => cmd_train(&a.resolve()?, out),
        Command::Eval(a) => cmd_eval(&a.resolve()?, out),
        Command::Experiment(a) => cmd_experiment(&a.resolve()?, out),
        Command::Explain(a) => cmd_explain(&a, out),
    }
}

fn say(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).pipeline()
}

pub fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = CohortSpec { seed: a.seed, noise: a.noise, ..CohortSpec::with_students(a.n) };
    spec.validate().input()?;
    let cohort = synth::generate(&spec).pipeline()?;
    io::save_bundle(&a.out, &cohort.bundle).pipeline()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Id", "Class", "Planted"]).pipeline()?;
    for ((id, label), planted) in cohort.ids.iter().zip(&cohort.labels).zip(&cohort.planted) {
        w.write_record([id.as_str(), label.label(), planted.label()]).pipeline()?;
    }
    io::write_atomic(&a.out.join("ground_truth.csv"), &w.into_inner().map_err(|e| anyhow!(e.to_string())).pipeline()?)
        .pipeline()?;

    let ruleset = spec.ruleset.clone().unwrap_or_else(synth::default_ruleset);
    let rules = ruleset.render();
    let saved = SavedModel {
        approach: Approach::MergeAll,
        variant: Variant::Discretized,
        algorithm: None,
        seed: a.seed,
        model: FusionModel::Single(ruleset),
    };
    io::write_json(&a.out.join("planted_model.json"), &saved).pipeline()?;
    io::write_atomic(&a.out.join("planted_rules.txt"), rules.as_bytes()).pipeline()?;
    say(out, &format!("wrote {} students to {}\n", cohort.ids.len(), a.out.display()))
}

pub fn cmd_preprocess(c: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let input = need(&c.input, "input")?;
    let dest = need(&c.out, "out")?;
    let raw = io::load_bundle(input).input()?;
    let config = c.preprocess_config();
    let (bundle, mapping) = if c.anonymize {
        let (b, m) = preprocess::anonymize(&raw, config.seed).input()?;
        (b, Some(m))
    } else {
        (raw, None)
    };
    let pre = preprocess::preprocess_bundle(&bundle, &config).input()?;
    experiment::save_preprocessed(dest, &pre).pipeline()?;
    if let Some(m) = mapping {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["original", "anonymized"]).pipeline()?;
        for (o, n) in &m.pairs {
            w.write_record([o, n]).pipeline()?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow!(e.to_string())).pipeline()?;
        io::write_atomic(&dest.join("id_mapping.csv"), &bytes).pipeline()?;
    }
    let n = pre.fused.get(Source::Exam).map_or(0, DataTable::n_rows);
    say(out, &format!("preprocessed {n} students into {}\n", dest.display()))
}

fn load_pre(c: &RunConfig) -> CliResult<preprocess::Preprocessed> {
    experiment::load_preprocessed(need(&c.data, "data")?).input()
}

pub fn cmd_select(a: &SelectArgs, out: &mut dyn Write) -> CliResult<()> {
    let variant =
        Variant::parse(&a.variant).ok_or_else(|| CliError::Input(anyhow!("unknown variant `{}`", a.variant)))?;
    let bundle = io::load_bundle(&a.data.join(variant.name())).input()?;
    let table = match &a.source {
        None => join_on_id(&bundle, true).input()?,
        Some(s) => {
            let source = Source::parse(s)
                .filter(|s| *s != Source::Exam)
                .ok_or_else(|| CliError::Input(anyhow!("unknown input source `{s}`")))?;
            ensemble::source_dataset(&bundle, source).input()?
        }
    };
    let names = select::select_best_attributes(&table).pipeline()?;
    let json = serde_json::to_string_pretty(&names).pipeline()? + "\n";
    if let Some(p) = &a.out {
        io::write_atomic(p, json.as_bytes()).pipeline()?;
    }
    say(out, &json)
}

pub fn cmd_train(c: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let pre = load_pre(c)?;
    let approach = single(c.approaches().input()?, "--approach")?;
    let variant = single(c.variants().input()?, "--variant")?;
    let algorithm = single(c.algorithms().input()?, "--algorithm")?;
    let bundle = pre.variant(variant);
    let mut fusion = FusionConfig { approach, weights: c.weight_map().input()? };
    if approach.is_ensemble() && c.weight_search {
        let datasets = ensemble::prepare(approach, bundle, None).pipeline()?;
        let found = ensemble::weight_search(&datasets, algorithm, &c.params, &c.weight_grid, c.k, c.seed).pipeline()?;
        fusion.weights = found.weights;
    }
    let (model, _) = ensemble::run_approach(&fusion, bundle, algorithm, &c.params, c.seed).pipeline()?;
    let saved = SavedModel { approach, variant, algorithm: Some(algorithm), seed: c.seed, model };
    if let Some(p) = &c.out {
        io::write_json(p, &saved).pipeline()?;
    }
    say(out, &saved.model.render())
}

fn cells(c: &RunConfig) -> CliResult<Vec<Cell>> {
    Ok(eval::grid_cells(&c.grid().input()?))
}

pub fn cmd_eval(c: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let pre = load_pre(c)?;
    let grid = c.grid().input()?;
    for cell in cells(c)? {
        let r = eval::evaluate_cell(&pre, &grid, cell).pipeline()?;
        let mut text = format!(
            "{} / {} / {}: accuracy {:.4}% AUC {:.4}\n",
            cell.approach.title(),
            cell.variant.name(),
            cell.algorithm.title(),
            r.result.accuracy,
            r.result.auc
        );
        if let Some(w) = &r.weights {
            let ws: Vec<String> = w.iter().map(|(s, v)| format!("{}={v}", s.title())).collect();
            text += &format!("  weights: {}\n", ws.join(", "));
        }
        text += "  confusion (rows = actual Pass, Fail, Dropout):\n";
        for row in &r.result.confusion {
            let cols: Vec<String> = row.iter().map(|n| format!("{n:>5}")).collect();
            text += &format!("  {}\n", cols.join(""));
        }
        say(out, &text)?;
    }
    Ok(())
}

pub fn cmd_experiment(c: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let pre = load_pre(c)?;
    let grid = c.grid().input()?;
    let report = experiment::run_grid(&pre, &grid).pipeline()?;
    if let Some(dir) = &c.out {
        io::write_atomic(&dir.join("report.csv"), report.to_csv().as_bytes()).pipeline()?;
        io::write_atomic(&dir.join("report.txt"), report.to_text().as_bytes()).pipeline()?;
        io::write_json(&dir.join("report.json"), &report).pipeline()?;
    }
    say(out, &report.to_text())?;
    if let Some((t, r)) = report.best() {
        say(
            out,
            &format!(
                "best: {} with {} on {} data, accuracy {:.4}% AUC {:.4}\n",
                r.algorithm.title(),
                t.approach.title(),
                t.variant.name(),
                r.accuracy,
                r.auc
            ),
        )?;
    }
    Ok(())
}

/// Finds a student by id, falling back to a zero-based row number.
fn find_row(table: &DataTable, key: &str) -> anyhow::Result<usize> {
    if let Some(r) = table.ids().iter().position(|id| *id == key) {
        return Ok(r);
    }
    match key.parse::<usize>() {
        Ok(r) if r < table.n_rows() => Ok(r),
        _ => bail!("no student with id or row `{key}`"),
    }
}

pub fn cmd_explain(a: &ExplainArgs, out: &mut dyn Write) -> CliResult<()> {
    let saved: SavedModel = io::read_json(&a.model).input()?;
    say(out, &saved.model.render())?;
    let (Some(key), Some(dir)) = (&a.student, &a.data) else {
        return Ok(());
    };
    let bundle = io::load_bundle(&dir.join(saved.variant.name())).input()?;
    let table = join_on_id(&bundle, false).input()?;
    let row = find_row(&table, key).input()?;
    let id = table.ids()[row].to_string();
    let mut text = format!("\nStudent {id} (row {row})\n");
    match &saved.model {
        FusionModel::Single(m) => {
            let e = m.explain(&m.instance_from_row(&table, row).input()?).input()?;
            text += &format!("  prediction: {}\n  fired: {}\n", e.label, e.reason);
        }
        FusionModel::Vote(v) => {
            let mut parts = Vec::new();
            for member in &v.members {
                let x = member.model.instance_from_row(&table, row).input()?;
                let e = member.model.explain(&x).input()?;
                text += &format!(
                    "  {} (weight {}): {}\n    fired: {}\n",
                    member.source.title(),
                    member.weight,
                    e.label,
                    e.reason
                );
                parts.push(x);
            }
            let d = v.predict_parts(&parts).input()?;
            let labels = saved.model.class_labels();
            let best = d.iter().enumerate().fold(0, |b, (i, p)| if *p > d[b] { i } else { b });
            text += &format!("  vote: {}\n", labels[best]);
        }
    }
    if let Some(c) = table.class_index() {
        if let Some(i) = table.rows()[row][c].as_index() {
            text += &format!("  actual: {}\n", table.specs()[c].labels().map_or("?", |l| l[i].as_str()));
        }
    }
    say(out, &text)
}
