//! Deterministic line-plot renderer.
//!
//! Everything that influences pixels lives in this module: layout constants,
//! tick placement, an embedded bitmap font and a distance-based anti-aliased
//! stroker. There is no dependence on host fonts or platform rasterizers, so
//! a given input renders to the same bytes everywhere.

mod canvas;
pub mod font;
mod plot;
mod png_io;
pub mod ticks;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use canvas::{polyline_coverage, Canvas};
pub use plot::{auto_limits, data_to_pixel, render_plot, AxesBox, Limits};
pub use png_io::{decode_png, encode_png, read_png, write_png};
pub use ticks::{format_tick, log_ticks, nice_ticks};

/// 8-bit RGB colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const WHITE: Rgb = Rgb(255, 255, 255);
    pub const BLACK: Rgb = Rgb(0, 0, 0);

    pub fn unit(self) -> [f32; 3] {
        [self.0 as f32 / 255.0, self.1 as f32 / 255.0, self.2 as f32 / 255.0]
    }
}

/// One variable of a sample: values with optional strictly increasing
/// timestamps. Without timestamps the sample index is used as time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        TimeSeries {
            name: name.into(),
            values,
            timestamps: None,
        }
    }

    pub fn with_timestamps(name: impl Into<String>, values: Vec<f64>, timestamps: Vec<f64>) -> Result<Self> {
        let ts = TimeSeries {
            name: name.into(),
            values,
            timestamps: Some(timestamps),
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = &self.timestamps {
            if t.len() != self.values.len() {
                return Err(Error::Data(format!(
                    "series {:?}: {} timestamps for {} values",
                    self.name,
                    t.len(),
                    self.values.len()
                )));
            }
            if t.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Data(format!(
                    "series {:?}: timestamps not strictly increasing",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// `(t, y)` pairs, with `t` the timestamp or the sample index.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &y)| {
            let t = self.timestamps.as_ref().map_or(i as f64, |ts| ts[i]);
            (t, y)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum XScale {
    #[default]
    Linear,
    Log10,
}

/// Everything that determines how a plot is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub width_px: usize,
    pub height_px: usize,
    /// Fractions of the canvas: `(left, right, bottom, top)`, measured from
    /// the bottom-left corner.
    pub axes_box: (f64, f64, f64, f64),
    pub x_scale: XScale,
    pub palette: Vec<Rgb>,
    pub line_width_px: f64,
    pub background: Rgb,
    pub data_margin: f64,
    pub axis_color: Rgb,
    pub axis_line_width_px: f64,
    pub tick_length_px: f64,
    pub tick_pad_px: f64,
    /// Preferred tick counts along x and y.
    pub tick_target: (usize, usize),
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            width_px: 432,
            height_px: 288,
            axes_box: (0.125, 0.9, 0.11, 0.88),
            x_scale: XScale::Linear,
            palette: vec![
                Rgb(31, 119, 180),
                Rgb(255, 127, 14),
                Rgb(44, 160, 44),
                Rgb(214, 39, 40),
                Rgb(148, 103, 189),
                Rgb(140, 86, 75),
            ],
            line_width_px: 1.5,
            background: Rgb::WHITE,
            data_margin: 0.05,
            axis_color: Rgb::BLACK,
            axis_line_width_px: 0.8,
            tick_length_px: 3.5,
            tick_pad_px: 3.5,
            tick_target: (8, 6),
        }
    }
}

impl PlotSpec {
    pub fn log_x() -> Self {
        PlotSpec {
            x_scale: XScale::Log10,
            ..PlotSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (l, r, b, t) = self.axes_box;
        if !(0.0 <= l && l < r && r <= 1.0 && 0.0 <= b && b < t && t <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "axes box {:?} must satisfy 0 <= left < right <= 1 and 0 <= bottom < top <= 1",
                self.axes_box
            )));
        }
        if self.palette.is_empty() {
            return Err(Error::InvalidArgument("palette must not be empty".into()));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidArgument("canvas has zero area".into()));
        }
        Ok(())
    }
}

/// A rendered plot: `height × width × 3` channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotImage {
    pub pixels: Vec<f32>,
    pub spec: PlotSpec,
}

impl PlotImage {
    pub fn width(&self) -> usize {
        self.spec.width_px
    }

    pub fn height(&self) -> usize {
        self.spec.height_px
    }

    /// Quantized 8-bit RGB bytes, row-major.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

/// An 8-bit RGB image as it is stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgb8Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl From<&PlotImage> for Rgb8Image {
    fn from(p: &PlotImage) -> Self {
        Rgb8Image {
            width: p.width(),
            height: p.height(),
            data: p.to_rgb8(),
        }
    }
}
