use std::f64::consts::PI;

use indexmap::IndexMap;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance, Sample};
use crate::error::{Error, Result};
use crate::raster::TimeSeries;
use crate::rng::{stream, Purpose, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Noisy sine against noisy square wave.
    Waveshape2,
    /// Two variables of independent length whose trend sign is the class.
    FisioLike,
    /// Thirteen classes of log-time induction curves.
    OptoxLike,
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::Waveshape2 => "waveshape2",
            SyntheticKind::FisioLike => "fisio_like",
            SyntheticKind::OptoxLike => "optox_like",
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            SyntheticKind::Waveshape2 | SyntheticKind::FisioLike => 2,
            SyntheticKind::OptoxLike => OPTOX_LEVELS.len(),
        }
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "waveshape2" => Ok(SyntheticKind::Waveshape2),
            "fisio_like" => Ok(SyntheticKind::FisioLike),
            "optox_like" => Ok(SyntheticKind::OptoxLike),
            _ => Err(Error::InvalidArgument(format!("unknown synthetic dataset {s:?}"))),
        }
    }
}

fn gauss(rng: &mut Rng, sd: f64) -> f64 {
    Normal::new(0.0, sd).expect("positive sd").sample(rng)
}

fn waveshape(rng: &mut Rng, label: usize) -> Vec<f64> {
    let n = rng.gen_range(100..=150);
    let cycles = rng.gen_range(2.0..4.0);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let amp = rng.gen_range(0.5..2.0);
    let offset = rng.gen_range(-1.0..1.0);
    (0..n)
        .map(|i| {
            let s = (2.0 * PI * cycles * i as f64 / n as f64 + phase).sin();
            let shape = if label == 0 { s } else { s.signum() };
            offset + amp * shape + gauss(rng, 0.1 * amp)
        })
        .collect()
}

fn fisio(rng: &mut Rng, label: usize) -> IndexMap<String, TimeSeries> {
    let slope = rng.gen_range(0.05..0.3) * if label == 0 { -1.0 } else { 1.0 };
    let mut vars = IndexMap::new();
    let n = rng.gen_range(60..=150);
    let hr = (0..n).map(|i| 80.0 + slope * i as f64 + gauss(rng, 2.0)).collect();
    vars.insert("HR".to_string(), TimeSeries::new("HR", hr));
    let n = rng.gen_range(60..=150);
    let ven = (0..n).map(|i| 15.0 + 0.3 * slope * i as f64 + gauss(rng, 3.0)).collect();
    vars.insert("VEN".to_string(), TimeSeries::new("VEN", ven));
    vars
}

/// Relative heights of the two intermediate plateaus, per class.
const OPTOX_LEVELS: [(f64, f64); 13] = [
    (0.25, 0.45),
    (0.25, 0.6),
    (0.25, 0.75),
    (0.25, 0.9),
    (0.4, 0.55),
    (0.4, 0.7),
    (0.4, 0.85),
    (0.55, 0.65),
    (0.55, 0.8),
    (0.55, 0.95),
    (0.7, 0.8),
    (0.7, 0.95),
    (0.85, 0.95),
];

fn optox(rng: &mut Rng, label: usize) -> TimeSeries {
    let n = rng.gen_range(100..=160);
    let (lj, li) = OPTOX_LEVELS[label];
    let (lj, li) = (lj + gauss(rng, 0.01), li + gauss(rng, 0.01));
    let scale = rng.gen_range(0.8..1.2);
    let f0 = 0.15;
    let steps = [(2e-4, f0, lj), (3e-3, lj, li), (3e-2, li, 1.0)];
    let t: Vec<f64> = (0..n)
        .map(|i| 1e-5 * 10f64.powf(5.0 * i as f64 / (n - 1) as f64))
        .collect();
    let values = t
        .iter()
        .map(|&t| {
            let mut f = f0;
            for &(tau, from, to) in &steps {
                f += (to - from) / (1.0 + (tau / t).powi(2));
            }
            scale * (f + gauss(rng, 0.005))
        })
        .collect();
    TimeSeries::with_timestamps("fluorescence", values, t).expect("timestamps increase")
}

/// Generates `n_per_class` samples of each class, all placed in `train`.
/// Sample `id` draws from its own seeded stream, so a sample does not depend
/// on how many others were generated.
pub fn gen_synthetic(kind: SyntheticKind, n_per_class: usize, seed: u64) -> Result<Dataset> {
    if n_per_class < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples per class, got {n_per_class}"
        )));
    }
    let k = kind.n_classes();
    let mut train = Vec::with_capacity(k * n_per_class);
    for id in 0..(k * n_per_class) as u64 {
        let label = id as usize % k;
        let mut rng = stream(seed, Purpose::Synthetic, id);
        let variables = match kind {
            SyntheticKind::Waveshape2 => {
                return_one("value", TimeSeries::new("value", waveshape(&mut rng, label)))
            }
            SyntheticKind::FisioLike => fisio(&mut rng, label),
            SyntheticKind::OptoxLike => return_one("fluorescence", optox(&mut rng, label)),
        };
        train.push(Sample {
            id,
            label,
            variables,
        });
    }
    Ok(Dataset {
        name: kind.name().to_string(),
        class_names: (0..k).map(|c| c.to_string()).collect(),
        train,
        test: Vec::new(),
        provenance: Provenance::Custom,
    })
}

fn return_one(name: &str, s: TimeSeries) -> IndexMap<String, TimeSeries> {
    let mut m = IndexMap::new();
    m.insert(name.to_string(), s);
    m
}
