use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::stats::{RunResult, Split};

/// Published per-run accuracies: method → dataset → `(run, accuracy)` sorted
/// by run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineResults {
    pub groups: IndexMap<String, IndexMap<String, Vec<(u32, f64)>>>,
}

impl BaselineResults {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn methods(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn accuracies(&self, method: &str, dataset: &str) -> Option<Vec<f64>> {
        self.groups
            .get(method)?
            .get(dataset)
            .map(|runs| runs.iter().map(|&(_, a)| a).collect())
    }

    /// Flattens to run results; published baselines are test accuracies.
    pub fn to_run_results(&self) -> Vec<RunResult> {
        let mut out = Vec::new();
        for (method, datasets) in &self.groups {
            for (dataset, runs) in datasets {
                out.extend(runs.iter().map(|&(run, accuracy)| RunResult {
                    dataset: dataset.clone(),
                    method: method.clone(),
                    run,
                    split: Split::Test,
                    accuracy,
                }));
            }
        }
        out
    }

    pub fn count(&self, method: &str, dataset: &str) -> usize {
        self.groups
            .get(method)
            .and_then(|d| d.get(dataset))
            .map_or(0, Vec::len)
    }
}

/// Reads `method,dataset,run,accuracy` rows. A header line is optional.
pub fn load_baseline_csv(path: &Path) -> Result<BaselineResults> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Data(format!("{}: {other:?}", path.display())),
        })?;
    let mut out = BaselineResults::default();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 1;
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if i == 0 && record.get(0) == Some("method") {
            continue;
        }
        if record.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", record.len())));
        }
        let run: u32 = record[2]
            .parse()
            .map_err(|_| err(format!("bad run number {:?}", &record[2])))?;
        let acc: f64 = record[3]
            .parse()
            .map_err(|_| err(format!("bad accuracy {:?}", &record[3])))?;
        if !(0.0..=1.0).contains(&acc) {
            return Err(err(format!("accuracy {acc} outside [0, 1]")));
        }
        let runs = out
            .groups
            .entry(record[0].to_string())
            .or_default()
            .entry(record[1].to_string())
            .or_default();
        if runs.iter().any(|&(r, _)| r == run) {
            return Err(err(format!(
                "duplicate run {run} for ({}, {})",
                &record[0], &record[1]
            )));
        }
        runs.push((run, acc));
    }
    for runs in out.groups.values_mut().flat_map(|d| d.values_mut()) {
        runs.sort_by_key(|&(r, _)| r);
    }
    if out.is_empty() {
        log::warn!("{}: no baseline results", path.display());
    }
    Ok(out)
}
