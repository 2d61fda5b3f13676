//! Experiment orchestration: render, normalize, train seeded runs, record
//! results, and summarize them against baselines.

mod config;
mod images;
mod report;
mod results;
mod runner;

pub use config::{branches, Branch, DatasetRef, ExperimentConfig, Preset, Variant};
pub use images::{build_examples, render_sample, Preprocessing, RenderCache, CACHE_ENV};
pub use report::write_report;
pub use results::{append_results, read_results, ResultRow, RESULTS_HEADER};
pub use runner::{
    results_path, run_experiment, split_for_run, train_run, ExperimentOutcome, RunFailure, RunReport,
};
