//! Image pre-processing: 8-bit to `[0, 1]` rescaling and samplewise
//! standardization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Rgb8Image;
use crate::tensor::Tensor;

/// Standard deviations below this are treated as a constant image.
pub const DEGENERATE_STD: f64 = 1e-8;

/// `height × width × channels` real-valued image, row-major, channels last.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::shape(
                "image",
                format!("{} values for {height}×{width}×{channels}", data.len()),
            ));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.height, self.width, self.channels]
    }

    /// `[1, H, W, C]` tensor holding a copy of the pixels.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(
            vec![1, self.height, self.width, self.channels],
            self.data.clone(),
        )
        .expect("image shape is consistent")
    }
}

/// Divides every 8-bit channel value by 255.
pub fn rescale01(img: &Rgb8Image) -> Image {
    Image {
        height: img.height,
        width: img.width,
        channels: 3,
        data: img.data.iter().map(|&v| v as f32 / 255.0).collect(),
    }
}

/// Single-channel luminance, `0.299 R + 0.587 G + 0.114 B`.
pub fn grayscale(img: &Image) -> Result<Image> {
    if img.channels != 3 {
        return Err(Error::shape(
            "grayscale",
            format!("expected 3 channels, got {}", img.channels),
        ));
    }
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
        .collect();
    Image::new(img.height, img.width, 1, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeMode {
    /// One mean and standard deviation over all pixels and channels.
    #[default]
    Joint,
    /// Separate statistics per channel.
    PerChannel,
}

/// A standardized image and the statistics that were removed. In per-channel
/// mode the vectors hold one entry per channel, otherwise exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedImage {
    pub pixels: Image,
    pub mean_removed: Vec<f64>,
    pub std_used: Vec<f64>,
}

/// Population mean and standard deviation, accumulated in f64.
fn moments<'a>(values: impl Iterator<Item = &'a f32> + Clone) -> (f64, f64) {
    let (mut n, mut sum) = (0usize, 0.0f64);
    for &v in values.clone() {
        n += 1;
        sum += v as f64;
    }
    let mean = sum / n.max(1) as f64;
    let var = values.map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n.max(1) as f64;
    (mean, var.sqrt())
}

/// Subtracts the image's own mean and divides by its own population standard
/// deviation. Constant images map to all zeros.
pub fn samplewise_standardize(img: &Image) -> NormalizedImage {
    standardize(img, StandardizeMode::Joint)
}

pub fn standardize(img: &Image, mode: StandardizeMode) -> NormalizedImage {
    let c = img.channels;
    let groups = match mode {
        StandardizeMode::Joint => 1,
        StandardizeMode::PerChannel => c,
    };
    let mut data = img.data.clone();
    let mut means = Vec::with_capacity(groups);
    let mut stds = Vec::with_capacity(groups);
    for g in 0..groups {
        let select = |i: usize| groups == 1 || i % c == g;
        let (mean, std) = moments(img.data.iter().enumerate().filter(|(i, _)| select(*i)).map(|(_, v)| v));
        let degenerate = std < DEGENERATE_STD;
        for (i, v) in data.iter_mut().enumerate() {
            if select(i) {
                *v = if degenerate {
                    0.0
                } else {
                    ((*v as f64 - mean) / std) as f32
                };
            }
        }
        means.push(mean);
        stds.push(if degenerate { 0.0 } else { std });
    }
    NormalizedImage {
        pixels: Image {
            data,
            ..img.clone()
        },
        mean_removed: means,
        std_used: stds,
    }
}

/// Min-max maps an image of any range to 8-bit RGB for viewing. Single
/// channel images are replicated to grey; constant images come out black.
pub fn debug_rgb8(img: &Image) -> Result<Rgb8Image> {
    if img.channels != 1 && img.channels != 3 {
        return Err(Error::shape(
            "debug_rgb8",
            format!("expected 1 or 3 channels, got {}", img.channels),
        ));
    }
    let (lo, hi) = img
        .data
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let q = |v: f32| {
        if span > 0.0 {
            (((v - lo) / span) * 255.0).round() as u8
        } else {
            0
        }
    };
    let data = if img.channels == 3 {
        img.data.iter().map(|&v| q(v)).collect()
    } else {
        img.data.iter().flat_map(|&v| [q(v); 3]).collect()
    };
    Ok(Rgb8Image {
        width: img.width,
        height: img.height,
        data,
    })
}
