use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{RunResult, Split};

pub const RESULTS_HEADER: &str = "dataset,variant,method,run,seed,split,accuracy,epochs_ran,wall_seconds";

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub variant: String,
    pub method: String,
    pub run: u32,
    pub seed: u64,
    pub split: Split,
    pub accuracy: f64,
    pub epochs_ran: usize,
    pub wall_seconds: Option<f64>,
}

impl ResultRow {
    /// Method label for comparisons: the bare method for univariate runs,
    /// otherwise tagged with the variant.
    pub fn method_label(&self) -> String {
        if self.variant == "univariate" {
            self.method.clone()
        } else {
            format!("{}[{}]", self.method, self.variant)
        }
    }

    pub fn to_run_result(&self) -> RunResult {
        RunResult {
            dataset: self.dataset.clone(),
            method: self.method_label(),
            run: self.run,
            split: self.split,
            accuracy: self.accuracy,
        }
    }

    fn to_line(&self) -> String {
        let wall = self.wall_seconds.map_or(String::new(), |s| format!("{s:.3}"));
        format!(
            "{},{},{},{},{},{},{},{},{}\n",
            self.dataset,
            self.variant,
            self.method,
            self.run,
            self.seed,
            self.split.as_str(),
            self.accuracy,
            self.epochs_ran,
            wall
        )
    }
}

fn check_field(name: &str, v: &str) -> Result<()> {
    if v.contains([',', '\n', '\r', '"']) {
        return Err(Error::InvalidArgument(format!("{name} {v:?} cannot go in a results row")));
    }
    Ok(())
}

/// Appends rows as a single write, adding the header to a new file.
/// Writers in other processes see whole lines only.
pub fn append_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut buf = String::new();
    for r in rows {
        check_field("dataset", &r.dataset)?;
        check_field("variant", &r.variant)?;
        check_field("method", &r.method)?;
        buf.push_str(&r.to_line());
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let empty = f.metadata().map_err(|e| Error::io(path, e))?.len() == 0;
    if empty {
        buf.insert_str(0, &format!("{RESULTS_HEADER}\n"));
    }
    f.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RESULTS_HEADER => {}
        Some((_, h)) => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("expected header {RESULTS_HEADER:?}, found {h:?}"),
            })
        }
        None => return Ok(Vec::new()),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(err(format!("expected 9 fields, found {}", f.len())));
        }
        let num = |k: usize, what: &str| -> Result<f64> {
            f[k].trim()
                .parse::<f64>()
                .map_err(|_| err(format!("bad {what} {:?}", f[k])))
        };
        out.push(ResultRow {
            dataset: f[0].to_string(),
            variant: f[1].to_string(),
            method: f[2].to_string(),
            run: f[3].parse().map_err(|_| err(format!("bad run {:?}", f[3])))?,
            seed: f[4].parse().map_err(|_| err(format!("bad seed {:?}", f[4])))?,
            split: f[5].parse().map_err(|e: Error| err(e.to_string()))?,
            accuracy: num(6, "accuracy")?,
            epochs_ran: f[7].parse().map_err(|_| err(format!("bad epochs_ran {:?}", f[7])))?,
            wall_seconds: if f[8].trim().is_empty() {
                None
            } else {
                Some(num(8, "wall_seconds")?)
            },
        });
    }
    Ok(out)
}
