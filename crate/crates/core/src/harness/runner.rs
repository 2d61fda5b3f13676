use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{branches, Branch, ExperimentConfig};
use super::images::{build_examples, RenderCache};
use super::results::{append_results, read_results, ResultRow};
use crate::data::{stratified_split, Dataset, Provenance, Sample};
use crate::error::{Error, Result};
use crate::model::{build_model, evaluate_accuracy, save_checkpoint, train, Example, TrainedModel};
use crate::raster::PlotSpec;
use crate::stats::Split;

/// A run that did not complete, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub dataset: String,
    pub variant: String,
    pub run: u32,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutcome {
    /// Train and test rows of every run of the experiment, including runs
    /// found already complete in the results file.
    pub rows: Vec<ResultRow>,
    pub failures: Vec<RunFailure>,
    /// `(variant, seed)` pairs skipped because their rows already existed.
    pub resumed: Vec<(String, u64)>,
}

impl ExperimentOutcome {
    pub fn accuracies(&self, split: Split) -> Vec<f64> {
        self.rows.iter().filter(|r| r.split == split).map(|r| r.accuracy).collect()
    }
}

pub fn results_path(config: &ExperimentConfig) -> PathBuf {
    config.output_dir.join("results.csv")
}

/// Train and test samples for one seed: the official split when the data
/// has one, otherwise a stratified split drawn from the seed.
pub fn split_for_run(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Vec<Sample>, Vec<Sample>)> {
    match ds.provenance {
        Provenance::UcrOfficialSplit => Ok((ds.train.clone(), ds.test.clone())),
        Provenance::Custom => stratified_split(&ds.train, train_fraction, seed),
    }
}

/// Result of one seeded training run.
pub struct RunReport {
    pub model: TrainedModel,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub wall_seconds: f64,
}

/// Builds, trains and evaluates one model. `config.model` supplies every
/// setting except the class count, head count and seed.
pub fn train_run(
    config: &ExperimentConfig,
    n_classes: usize,
    seed: u64,
    train_set: &[Example],
    test_set: &[Example],
) -> Result<RunReport> {
    let first = train_set
        .first()
        .ok_or_else(|| Error::Data("training set is empty".into()))?;
    let model_cfg = crate::model::ModelConfig {
        n_classes,
        n_heads: first.inputs.len(),
        seed,
        ..config.model.clone()
    };
    let start = Instant::now();
    let mut model = build_model(&model_cfg, first.inputs[0].shape())?;
    train(&mut model, train_set)?;
    let train_accuracy = evaluate_accuracy(&model, train_set)?;
    let test_accuracy = evaluate_accuracy(&model, test_set)?;
    Ok(RunReport {
        model,
        train_accuracy,
        test_accuracy,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn pick(examples: &BTreeMap<u64, Example>, samples: &[Sample]) -> Result<Vec<Example>> {
    samples
        .iter()
        .map(|s| {
            examples
                .get(&s.id)
                .cloned()
                .ok_or_else(|| Error::Data(format!("no rendered image for sample {}", s.id)))
        })
        .collect()
}

fn error_chain(e: &dyn std::error::Error) -> String {
    let mut s = e.to_string();
    let mut cause = e.source();
    while let Some(c) = cause {
        s.push_str(": ");
        s.push_str(&c.to_string());
        cause = c.source();
    }
    s
}

fn checkpoint_path(config: &ExperimentConfig, ds: &str, variant: &str, seed: u64) -> PathBuf {
    let variant = variant.replace(':', "-");
    config
        .output_dir
        .join("checkpoints")
        .join(format!("{ds}__{variant}__seed{seed}.ckpt"))
}

fn one_run(
    config: &ExperimentConfig,
    ds: &Dataset,
    branch: &Branch,
    examples: &BTreeMap<u64, Example>,
    run: u32,
) -> Result<Vec<ResultRow>> {
    let seed = run as u64;
    let (train_s, test_s) = split_for_run(ds, config.train_fraction, seed)?;
    let report = train_run(
        config,
        ds.n_classes(),
        seed,
        &pick(examples, &train_s)?,
        &pick(examples, &test_s)?,
    )?;
    if config.save_checkpoints {
        save_checkpoint(&checkpoint_path(config, &ds.name, &branch.label, seed), &report.model)?;
    }
    let row = |split, accuracy| ResultRow {
        dataset: ds.name.clone(),
        variant: branch.label.clone(),
        method: config.method.clone(),
        run,
        seed,
        split,
        accuracy,
        epochs_ran: report.model.epochs_ran(),
        wall_seconds: config.record_wall_time.then_some(report.wall_seconds),
    };
    Ok(vec![
        row(Split::Train, report.train_accuracy),
        row(Split::Test, report.test_accuracy),
    ])
}

fn record_failure(path: &Path, f: &RunFailure) -> Result<()> {
    let new = !path.exists();
    let file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if new {
        w.write_record(["dataset", "variant", "run", "seed", "reason"])?;
    }
    w.write_record([
        f.dataset.clone(),
        f.variant.clone(),
        f.run.to_string(),
        f.seed.to_string(),
        f.reason.clone(),
    ])?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs every seed `1..=runs` of every branch of the configured variant.
///
/// Runs whose `(dataset, variant, seed)` already appear in the results file
/// are skipped. A failing run is logged to `errors.csv` and the remaining
/// runs continue. Rendered plots are cached on disk by content.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let ds = config.dataset.load()?;
    let branches = branches(config.variant, &ds.variable_names())?;
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let snapshot = config.output_dir.join("config.json");
    fs::write(&snapshot, serde_json::to_string_pretty(config)?).map_err(|e| Error::io(&snapshot, e))?;

    let results = results_path(config);
    let existing = if results.exists() {
        read_results(&results)?
    } else {
        Vec::new()
    };
    let done: HashSet<(String, String, u64)> = existing
        .iter()
        .map(|r| (r.dataset.clone(), r.variant.clone(), r.seed))
        .collect();
    let errors = config.output_dir.join("errors.csv");
    let cache = RenderCache::from_env(config.output_dir.join("cache"));
    let spec = PlotSpec {
        x_scale: config.x_scale,
        ..PlotSpec::default()
    };

    let mut outcome = ExperimentOutcome::default();
    for branch in &branches {
        let pending: Vec<u32> = (1..=config.runs)
            .filter(|&r| !done.contains(&(ds.name.clone(), branch.label.clone(), r as u64)))
            .collect();
        let examples = if pending.is_empty() {
            Ok(BTreeMap::new())
        } else {
            let all: Vec<Sample> = ds.samples().cloned().collect();
            build_examples(&all, &branch.heads, &spec, &config.preprocess, &cache)
                .map(|v| v.into_iter().map(|e| (e.id, e)).collect::<BTreeMap<_, _>>())
        };
        for run in 1..=config.runs {
            let seed = run as u64;
            if !pending.contains(&run) {
                outcome.resumed.push((branch.label.clone(), seed));
                outcome.rows.extend(
                    existing
                        .iter()
                        .filter(|r| r.dataset == ds.name && r.variant == branch.label && r.seed == seed)
                        .cloned(),
                );
                continue;
            }
            let attempt = examples
                .as_ref()
                .map_err(|e| Error::Data(format!("rendering failed: {e}")))
                .and_then(|ex| one_run(config, &ds, branch, ex, run));
            match attempt {
                Ok(rows) => {
                    log::info!(
                        "{} {} seed {seed}: train {:.4} test {:.4}",
                        ds.name,
                        branch.label,
                        rows[0].accuracy,
                        rows[1].accuracy
                    );
                    append_results(&results, &rows)?;
                    outcome.rows.extend(rows);
                }
                Err(e) => {
                    let reason = error_chain(&e);
                    log::error!("{} {} seed {seed} failed: {reason}", ds.name, branch.label);
                    let f = RunFailure {
                        dataset: ds.name.clone(),
                        variant: branch.label.clone(),
                        run,
                        seed,
                        reason,
                    };
                    record_failure(&errors, &f)?;
                    outcome.failures.push(f);
                }
            }
        }
    }
    Ok(outcome)
}
