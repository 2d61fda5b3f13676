use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::images::Preprocessing;
use crate::data::{gen_synthetic, load_dataset, load_ucr_dir, Dataset, SyntheticKind};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::raster::XScale;

/// Where an experiment's samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetRef {
    /// A UCR archive folder holding `<name>_TRAIN.tsv` and `<name>_TEST.tsv`.
    Ucr { path: PathBuf },
    /// A directory written by `data::save_dataset`.
    Saved { path: PathBuf },
    Synthetic {
        generator: SyntheticKind,
        n_per_class: usize,
        #[serde(default = "one")]
        seed: u64,
    },
}

fn one() -> u64 {
    1
}

impl DatasetRef {
    pub fn load(&self) -> Result<Dataset> {
        let ds = match self {
            DatasetRef::Ucr { path } => load_ucr_dir(path)?,
            DatasetRef::Saved { path } => load_dataset(path)?,
            DatasetRef::Synthetic {
                generator,
                n_per_class,
                seed,
            } => gen_synthetic(*generator, *n_per_class, *seed)?,
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// How the variables of a sample become network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// One variable, one plot.
    #[default]
    Univariate,
    /// All variables overlaid in a single plot.
    CombinedPlot,
    /// One plot per variable, each through its own conv stack.
    MultiHead,
    /// An independent univariate experiment for every variable.
    PerVariableUnivariate,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Univariate => "univariate",
            Variant::CombinedPlot => "combined_plot",
            Variant::MultiHead => "multi_head",
            Variant::PerVariableUnivariate => "per_variable_univariate",
        }
    }
}

/// One independent line of runs. Each entry of `heads` lists the variables
/// drawn together in one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    /// Value of the `variant` column in the results.
    pub label: String,
    pub heads: Vec<Vec<String>>,
}

pub fn branches(variant: Variant, variables: &[String]) -> Result<Vec<Branch>> {
    let multi = matches!(
        variant,
        Variant::CombinedPlot | Variant::MultiHead | Variant::PerVariableUnivariate
    );
    if variables.is_empty() {
        return Err(Error::Data("dataset has no variables".into()));
    }
    if multi && variables.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "variant {} needs at least 2 variables, the dataset has {}",
            variant.as_str(),
            variables.len()
        )));
    }
    if variant == Variant::Univariate && variables.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "univariate variant on a dataset with {} variables; pick combined_plot, multi_head or per_variable_univariate",
            variables.len()
        )));
    }
    let label = variant.as_str().to_string();
    Ok(match variant {
        Variant::Univariate => vec![Branch {
            label,
            heads: vec![variables.to_vec()],
        }],
        Variant::CombinedPlot => vec![Branch {
            label,
            heads: vec![variables.to_vec()],
        }],
        Variant::MultiHead => vec![Branch {
            label,
            heads: variables.iter().map(|v| vec![v.clone()]).collect(),
        }],
        Variant::PerVariableUnivariate => variables
            .iter()
            .map(|v| Branch {
                label: format!("{label}:{v}"),
                heads: vec![vec![v.clone()]],
            })
            .collect(),
    })
}

/// Run-count presets: a quick screen and the full protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Screen,
    Full,
}

impl Preset {
    pub fn runs(self) -> u32 {
        match self {
            Preset::Screen => 5,
            Preset::Full => 30,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "screen" => Ok(Preset::Screen),
            "full" => Ok(Preset::Full),
            _ => Err(Error::InvalidArgument(format!("unknown preset {s:?} (screen or full)"))),
        }
    }
}

/// A JSON experiment description. Seeds are `1..=runs`.
///
/// `model` starts from the defaults; its `n_classes`, `n_heads` and `seed`
/// are replaced for every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetRef,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub x_scale: XScale,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub preprocess: Preprocessing,
    /// Train share for data without an official split.
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    pub output_dir: PathBuf,
    /// Fill the `wall_seconds` column. Off by default so that results files
    /// are reproducible byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub save_checkpoints: bool,
}

fn default_runs() -> u32 {
    Preset::Screen.runs()
}

fn default_method() -> String {
    "CNN".into()
}

fn default_train_fraction() -> f64 {
    0.8
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetRef, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset,
            variant: Variant::default(),
            x_scale: XScale::default(),
            runs: default_runs(),
            method: default_method(),
            model: ModelConfig::default(),
            preprocess: Preprocessing::default(),
            train_fraction: default_train_fraction(),
            output_dir: output_dir.into(),
            record_wall_time: false,
            save_checkpoints: false,
        }
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.method.is_empty() || self.method.contains([',', '\n', '"']) {
            return Err(Error::InvalidArgument(format!("bad method name {:?}", self.method)));
        }
        // class and head counts come from the data, so check the rest with placeholders
        ModelConfig {
            n_classes: 2,
            n_heads: 1,
            ..self.model.clone()
        }
        .validate()
    }
}
