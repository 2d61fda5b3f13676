//! Time series classification by rendering each series as a line plot and
//! classifying the image with a shallow convolutional network.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense tensors, layer kernels with hand-written backward
//!   passes, and the Adam optimizer.
//! * [`raster`]: deterministic 432×288 line-plot renderer with axes, ticks
//!   and an embedded bitmap font.
//! * [`preprocess`]: pixel rescaling and samplewise standardization.
//! * [`model`]: the five-block CNN (single input or multi-head), training,
//!   prediction, feature maps and checkpoints.
//! * [`data`]: UCR TSV loading, baseline result ingestion, synthetic
//!   datasets and seeded stratified splits.
//! * [`stats`]: Kruskal-Wallis with tie correction, medians, rank counts
//!   and pairwise significance matrices.
//! * [`harness`]: the seeded multi-run experiment protocol.

pub mod data;
pub mod error;
pub mod harness;
pub mod model;
pub mod preprocess;
pub mod raster;
pub mod rng;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
