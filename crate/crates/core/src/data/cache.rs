//! JSON-lines serialization of datasets, one file per split.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance, Sample};
use crate::error::{Error, Result};
use crate::raster::TimeSeries;

#[derive(Serialize, Deserialize)]
struct SeriesRecord {
    /// JSON has no NaN; gaps are written as `null`.
    values: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamps: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    id: u64,
    label: usize,
    vars: IndexMap<String, SeriesRecord>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    name: String,
    class_names: Vec<String>,
    provenance: Provenance,
}

fn to_record(s: &Sample) -> SampleRecord {
    SampleRecord {
        id: s.id,
        label: s.label,
        vars: s
            .variables
            .iter()
            .map(|(k, v)| {
                (
                    k.clone(),
                    SeriesRecord {
                        values: v.values.iter().map(|&x| (!x.is_nan()).then_some(x)).collect(),
                        timestamps: v.timestamps.clone(),
                    },
                )
            })
            .collect(),
    }
}

fn from_record(r: SampleRecord) -> Result<Sample> {
    let mut variables = IndexMap::new();
    for (name, s) in r.vars {
        let ts = TimeSeries {
            name: name.clone(),
            values: s.values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            timestamps: s.timestamps,
        };
        ts.validate()?;
        variables.insert(name, ts);
    }
    Ok(Sample {
        id: r.id,
        label: r.label,
        variables,
    })
}

pub fn write_split_jsonl(path: &Path, samples: &[Sample]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in samples {
        serde_json::to_writer(&mut w, &to_record(s))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_split_jsonl(path: &Path) -> Result<Vec<Sample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(from_record(rec)?);
    }
    Ok(out)
}

/// Writes `dataset.json`, `train.jsonl` and `test.jsonl` into `dir`.
pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = Meta {
        name: ds.name.clone(),
        class_names: ds.class_names.clone(),
        provenance: ds.provenance,
    };
    let p = dir.join("dataset.json");
    fs::write(&p, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&p, e))?;
    write_split_jsonl(&dir.join("train.jsonl"), &ds.train)?;
    write_split_jsonl(&dir.join("test.jsonl"), &ds.test)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let p = dir.join("dataset.json");
    let meta: Meta = serde_json::from_slice(&fs::read(&p).map_err(|e| Error::io(&p, e))?)?;
    let ds = Dataset {
        name: meta.name,
        class_names: meta.class_names,
        train: read_split_jsonl(&dir.join("train.jsonl"))?,
        test: read_split_jsonl(&dir.join("test.jsonl"))?,
        provenance: meta.provenance,
    };
    ds.validate()?;
    Ok(ds)
}
