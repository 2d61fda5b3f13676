//! Datasets: samples of one or more time series with a class label.

mod baseline;
mod cache;
mod split;
mod synthetic;
mod ucr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::TimeSeries;

pub use baseline::{load_baseline_csv, BaselineResults};
pub use cache::{load_dataset, read_split_jsonl, save_dataset, write_split_jsonl};
pub use split::stratified_split;
pub use synthetic::{gen_synthetic, SyntheticKind};
pub use ucr::{load_ucr_dir, load_ucr_tsv};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub label: usize,
    /// Variable name to series, in a stable order. Lengths may differ.
    pub variables: IndexMap<String, TimeSeries>,
}

impl Sample {
    pub fn univariate(id: u64, label: usize, series: TimeSeries) -> Self {
        let mut variables = IndexMap::new();
        variables.insert(series.name.clone(), series);
        Sample {
            id,
            label,
            variables,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Fixed train/test split shipped with the data.
    UcrOfficialSplit,
    /// All samples in `train`; splits are drawn per run.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Original label text for each dense class index.
    pub class_names: Vec<String>,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.train.iter().chain(&self.test)
    }

    /// Variable names of the first sample.
    pub fn variable_names(&self) -> Vec<String> {
        self.samples()
            .next()
            .map(|s| s.variables.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_classes();
        let mut ids = std::collections::HashSet::new();
        for s in self.samples() {
            if s.label >= k {
                return Err(Error::Data(format!(
                    "{}: sample {} has label {} but there are {k} classes",
                    self.name, s.id, s.label
                )));
            }
            if s.variables.is_empty() {
                return Err(Error::Data(format!("{}: sample {} has no variables", self.name, s.id)));
            }
            if !ids.insert(s.id) {
                return Err(Error::Data(format!("{}: duplicate sample id {}", self.name, s.id)));
            }
        }
        Ok(())
    }
}
