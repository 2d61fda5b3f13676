use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::model::Example;
use crate::preprocess::{grayscale, rescale01, standardize, Image, StandardizeMode};
use crate::raster::{read_png, render_plot, write_png, PlotSpec, Rgb8Image, TimeSeries};

/// Environment variable that relocates the render cache.
pub const CACHE_ENV: &str = "TS2IMG_CACHE_DIR";

/// What happens to a rendered plot before it reaches the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preprocessing {
    /// Collapse RGB to one luminance channel.
    pub grayscale: bool,
    /// Samplewise standardization; off leaves values in `[0, 1]`.
    pub standardize: bool,
    pub standardize_mode: StandardizeMode,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing {
            grayscale: false,
            standardize: true,
            standardize_mode: StandardizeMode::Joint,
        }
    }
}

impl Preprocessing {
    pub fn apply(&self, img: &Rgb8Image) -> Result<Image> {
        let mut x = rescale01(img);
        if self.grayscale {
            x = grayscale(&x)?;
        }
        if self.standardize {
            x = standardize(&x, self.standardize_mode).pixels;
        }
        Ok(x)
    }

    pub fn channels(&self) -> usize {
        if self.grayscale {
            1
        } else {
            3
        }
    }
}

/// On-disk PNG cache of rendered plots, keyed by a digest of the series
/// values and the plot spec. Series names do not reach the pixels and are
/// left out of the key.
#[derive(Debug, Clone)]
pub struct RenderCache {
    dir: Option<PathBuf>,
}

impl RenderCache {
    pub fn at(dir: impl Into<PathBuf>) -> Self {
        RenderCache { dir: Some(dir.into()) }
    }

    /// `TS2IMG_CACHE_DIR` if set, else `fallback`.
    pub fn from_env(fallback: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::at(d),
            _ => Self::at(fallback),
        }
    }

    pub fn disabled() -> Self {
        RenderCache { dir: None }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn key(series: &[&TimeSeries], spec: &PlotSpec) -> Result<String> {
        let parts: Vec<(&[f64], Option<&[f64]>)> = series
            .iter()
            .map(|s| (s.values.as_slice(), s.timestamps.as_deref()))
            .collect();
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(spec)?);
        h.update(serde_json::to_vec(&parts)?);
        Ok(hex::encode(h.finalize()))
    }

    pub fn render(&self, series: &[&TimeSeries], spec: &PlotSpec) -> Result<Rgb8Image> {
        let Some(dir) = &self.dir else {
            let owned: Vec<TimeSeries> = series.iter().map(|s| (*s).clone()).collect();
            return Ok(Rgb8Image::from(&render_plot(&owned, spec)?));
        };
        let key = Self::key(series, spec)?;
        let path = dir.join(&key[..2]).join(format!("{key}.png"));
        if path.exists() {
            match read_png(&path) {
                Ok(img) if img.width == spec.width_px && img.height == spec.height_px => return Ok(img),
                Ok(_) | Err(_) => log::warn!("re-rendering unreadable cache entry {}", path.display()),
            }
        }
        let owned: Vec<TimeSeries> = series.iter().map(|s| (*s).clone()).collect();
        let img = Rgb8Image::from(&render_plot(&owned, spec)?);
        // write then rename so a concurrent reader never sees half a file
        let tmp = path.with_extension(format!("{}.tmp", std::process::id()));
        write_png(&tmp, &img)?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(img)
    }
}

fn lookup<'a>(sample: &'a Sample, names: &[String]) -> Result<Vec<&'a TimeSeries>> {
    names
        .iter()
        .map(|n| {
            sample.variables.get(n).ok_or_else(|| {
                Error::Data(format!("sample {} has no variable {n:?}", sample.id))
            })
        })
        .collect()
}

/// One raw image per head; each head overlays the variables it names.
pub fn render_sample(
    sample: &Sample,
    heads: &[Vec<String>],
    spec: &PlotSpec,
    cache: &RenderCache,
) -> Result<Vec<Rgb8Image>> {
    heads
        .iter()
        .map(|names| cache.render(&lookup(sample, names)?, spec))
        .collect()
}

/// Renders and pre-processes `samples` into network examples.
pub fn build_examples(
    samples: &[Sample],
    heads: &[Vec<String>],
    spec: &PlotSpec,
    prep: &Preprocessing,
    cache: &RenderCache,
) -> Result<Vec<Example>> {
    samples
        .iter()
        .map(|s| {
            let inputs = render_sample(s, heads, spec, cache)?
                .iter()
                .map(|img| prep.apply(img))
                .collect::<Result<Vec<_>>>()?;
            Ok(Example {
                id: s.id,
                inputs,
                label: s.label,
            })
        })
        .collect()
}
