use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ts2img::data::{load_baseline_csv, Dataset};
use ts2img::harness::{
    branches, read_results, render_sample, results_path, run_experiment, write_report, DatasetRef,
    ExperimentConfig, ExperimentOutcome, Preprocessing, Preset, RenderCache, Variant, CACHE_ENV,
};
use ts2img::model::{extract_feature_maps, feature_grid, load_checkpoint};
use ts2img::raster::{read_png, write_png, PlotSpec, XScale};
use ts2img::stats::{aggregate_medians, RunResult, Split};

#[derive(Parser)]
#[command(name = "ts2img", version, about = "Classify time series by rendering them as line plots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render every sample of a dataset to PNG.
    Render {
        /// UCR directory, saved dataset directory, or `synthetic:NAME[:PER_CLASS[:SEED]]`.
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        out: PathBuf,
        /// Logarithmic time axis.
        #[arg(long)]
        log_x: bool,
        /// Draw all variables of a sample into one plot instead of one plot each.
        #[arg(long)]
        overlay: bool,
    },
    /// Run the experiment described by a JSON config.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a config with the run count of a preset (screen = 5, full = 30).
    Runs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        preset: Preset,
    },
    /// Export the block activations of a checkpoint for one rendered plot.
    Featuremaps {
        #[arg(long)]
        checkpoint: PathBuf,
        /// A rendered plot PNG of the size the model was trained on.
        #[arg(long)]
        image: PathBuf,
        /// Conv block, 1-based.
        #[arg(long)]
        block: usize,
        #[arg(long, default_value_t = 0)]
        head: usize,
        /// Skip samplewise standardization (for models trained without it).
        #[arg(long)]
        raw: bool,
        #[arg(long, default_value_t = 8)]
        cols: usize,
        /// Output PNG; defaults to `featuremaps_block<K>.png` next to the checkpoint.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median, rank and p-value tables from a results CSV and optional baselines.
    Stats {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        baselines: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tables for an experiment directory, from its `results.csv` and an
    /// optional `baselines.csv` beside it.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_dataset(arg: &str) -> Result<DatasetRef> {
    if let Some(rest) = arg.strip_prefix("synthetic:") {
        let mut parts = rest.split(':');
        let generator = parts.next().unwrap_or_default().parse()?;
        let n_per_class = parts.next().map_or(Ok(50), str::parse).context("samples per class")?;
        let seed = parts.next().map_or(Ok(1), str::parse).context("generator seed")?;
        if parts.next().is_some() {
            bail!("expected synthetic:NAME[:PER_CLASS[:SEED]], got {arg:?}");
        }
        return Ok(DatasetRef::Synthetic {
            generator,
            n_per_class,
            seed,
        });
    }
    let path = PathBuf::from(arg);
    if path.join("dataset.json").exists() {
        Ok(DatasetRef::Saved { path })
    } else {
        Ok(DatasetRef::Ucr { path })
    }
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn render(ds: &Dataset, out: &Path, log_x: bool, overlay: bool) -> Result<usize> {
    let variables = ds.variable_names();
    let variant = if overlay && variables.len() > 1 {
        Variant::CombinedPlot
    } else if variables.len() > 1 {
        Variant::MultiHead
    } else {
        Variant::Univariate
    };
    let heads = &branches(variant, &variables)?[0].heads;
    let spec = PlotSpec {
        x_scale: if log_x { XScale::Log10 } else { XScale::Linear },
        ..PlotSpec::default()
    };
    let cache = match std::env::var_os(CACHE_ENV) {
        Some(d) if !d.is_empty() => RenderCache::at(d),
        _ => RenderCache::disabled(),
    };
    let mut written = 0;
    for (split, samples) in [("train", &ds.train), ("test", &ds.test)] {
        if samples.is_empty() {
            continue;
        }
        let dir = out.join(split);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for s in samples.iter() {
            let images = render_sample(s, heads, &spec, &cache)?;
            for (img, head) in images.iter().zip(heads) {
                let mut name = format!("{:05}_c{}", s.id, s.label);
                if heads.len() > 1 {
                    name = format!("{name}_{}", file_safe(&head[0]));
                }
                write_png(&dir.join(format!("{name}.png")), img)?;
                written += 1;
            }
        }
    }
    Ok(written)
}

fn summarize(outcome: &ExperimentOutcome) {
    let results: Vec<RunResult> = outcome.rows.iter().map(|r| r.to_run_result()).collect();
    for (dataset, row) in aggregate_medians(&results, Split::Test) {
        for (method, m) in row {
            println!("{dataset}\t{method}\tmedian test accuracy {m:.4}");
        }
    }
    if !outcome.resumed.is_empty() {
        println!("{} run(s) already present, skipped", outcome.resumed.len());
    }
    for f in &outcome.failures {
        println!("FAILED {} {} seed {}: {}", f.dataset, f.variant, f.seed, f.reason);
    }
}

fn experiment(config: &Path, preset: Option<Preset>) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_json_file(config)?;
    if let Some(p) = preset {
        cfg.runs = p.runs();
    }
    let outcome = run_experiment(&cfg)?;
    summarize(&outcome);
    println!("results in {}", results_path(&cfg).display());
    Ok(outcome.failures.is_empty())
}

fn tables(results: &Path, baselines: Option<&Path>, out: &Path) -> Result<()> {
    let mut all: Vec<RunResult> = read_results(results)?.iter().map(|r| r.to_run_result()).collect();
    if let Some(b) = baselines {
        all.extend(load_baseline_csv(b)?.to_run_results());
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for p in write_report(&all, out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Render {
            dataset,
            out,
            log_x,
            overlay,
        } => {
            let ds = parse_dataset(&dataset)?.load()?;
            let n = render(&ds, &out, log_x, overlay)?;
            println!("wrote {n} plots to {}", out.display());
        }
        Command::Train { config } => return experiment(&config, None),
        Command::Runs { config, preset } => return experiment(&config, Some(preset)),
        Command::Featuremaps {
            checkpoint,
            image,
            block,
            head,
            raw,
            cols,
            out,
        } => {
            let model = load_checkpoint(&checkpoint)?;
            let prep = Preprocessing {
                grayscale: model.input_shape[2] == 1,
                standardize: !raw,
                ..Preprocessing::default()
            };
            let input = prep.apply(&read_png(&image)?)?;
            let maps = extract_feature_maps(&model, &input, head, block)?;
            let out = out.unwrap_or_else(|| checkpoint.with_file_name(format!("featuremaps_block{block}.png")));
            write_png(&out, &feature_grid(&maps, cols)?)?;
            println!("{} maps of {}x{} to {}", maps.len(), maps[0].height, maps[0].width, out.display());
        }
        Command::Stats { results, baselines, out } => tables(&results, baselines.as_deref(), &out)?,
        Command::Report { out } => {
            let baselines = out.join("baselines.csv");
            tables(&out.join("results.csv"), baselines.exists().then_some(baselines.as_path()), &out)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
