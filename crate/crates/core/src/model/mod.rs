//! The shallow CNN classifier: five conv/pool blocks per input image, heads
//! concatenated along channels, then a two-layer dense classifier.

mod checkpoint;
mod features;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Image;
use crate::rng::{stream, Purpose};
use crate::tensor::{AdamConfig, AdamState, HeadSharing, LayerSpec, Network, Padding, Scalar, Sequential};

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use features::{extract_feature_maps, feature_activations, feature_grid};
pub use train::{evaluate_accuracy, predict, train, EpochStats, Example};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Filters of each conv block, in order.
    pub filters: Vec<usize>,
    pub kernel: usize,
    pub fc_units: Vec<usize>,
    pub dropout_rate: f64,
    pub n_classes: usize,
    /// Number of images per sample; one conv stack each unless shared.
    pub n_heads: usize,
    pub share_head_weights: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop once the epoch training loss fails to improve on its best by
    /// `min_delta` for this many consecutive epochs.
    pub patience: Option<usize>,
    pub min_delta: f64,
    /// Stop as soon as an epoch's mean training loss is at or below this.
    pub stop_at_loss: Option<f64>,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            filters: vec![16, 32, 64, 128, 256],
            kernel: 3,
            fc_units: vec![256, 128],
            dropout_rate: 0.5,
            n_classes: 2,
            n_heads: 1,
            share_head_weights: false,
            learning_rate: 0.001,
            batch_size: 32,
            epochs: 100,
            patience: Some(10),
            min_delta: 1e-4,
            stop_at_loss: None,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.filters.is_empty() || self.filters.contains(&0) {
            return bad(format!("filter schedule {:?} must be non-empty and positive", self.filters));
        }
        if self.kernel % 2 == 0 {
            return bad(format!("kernel {} must be odd for same padding", self.kernel));
        }
        if self.fc_units.contains(&0) {
            return bad(format!("dense sizes {:?} must be positive", self.fc_units));
        }
        if self.n_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.n_classes));
        }
        if self.n_heads == 0 {
            return bad("need at least one head".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        self.adam().validate()?;
        LayerSpec::Dropout {
            rate: self.dropout_rate,
        }
        .validate()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }

    pub fn sharing(&self) -> HeadSharing {
        if self.share_head_weights && self.n_heads > 1 {
            HeadSharing::Shared
        } else {
            HeadSharing::Separate
        }
    }

    /// `[conv, relu, maxpool]` per block.
    pub fn head_specs(&self) -> Vec<LayerSpec> {
        self.filters
            .iter()
            .flat_map(|&filters| {
                [
                    LayerSpec::Conv2d {
                        filters,
                        kernel: self.kernel,
                        stride: 1,
                        padding: Padding::Same,
                    },
                    LayerSpec::Relu,
                    LayerSpec::Maxpool,
                ]
            })
            .collect()
    }

    /// Flatten, then `[dense, relu, dropout]` per hidden size, then the
    /// output layer.
    pub fn classifier_specs(&self) -> Vec<LayerSpec> {
        let mut specs = vec![LayerSpec::Flatten];
        for &units in &self.fc_units {
            specs.push(LayerSpec::Dense { units });
            specs.push(LayerSpec::Relu);
            specs.push(LayerSpec::Dropout {
                rate: self.dropout_rate,
            });
        }
        specs.push(LayerSpec::Dense {
            units: self.n_classes,
        });
        specs
    }

    /// Spatial size after every block for a given input size.
    pub fn block_sizes(&self, height: usize, width: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.filters.len());
        let (mut h, mut w) = (height, width);
        for _ in &self.filters {
            h /= 2;
            w /= 2;
            out.push((h, w));
        }
        out
    }
}

/// Builds the network for per-image input shape `[H, W, C]`, with weights
/// drawn from the configuration's seed.
pub fn build_network<T: Scalar>(config: &ModelConfig, input_shape: [usize; 3]) -> Result<Network<T>> {
    config.validate()?;
    let [h, w, _] = input_shape;
    let min = 1usize << config.filters.len();
    if h < min || w < min {
        return Err(Error::shape(
            "build_model",
            format!(
                "{h}x{w} input is too small for {} pooling stages (need at least {min}x{min})",
                config.filters.len()
            ),
        ));
    }
    let mut rng = stream(config.seed, Purpose::Init, 0);
    let head_specs = config.head_specs();
    let stacks = match config.sharing() {
        HeadSharing::Shared => 1,
        HeadSharing::Separate => config.n_heads,
    };
    let heads = (0..stacks)
        .map(|_| Sequential::build(&head_specs, &input_shape, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut merged = heads[0].output_shape(&input_shape)?;
    merged[2] *= config.n_heads;
    let classifier = Sequential::build(&config.classifier_specs(), &merged, &mut rng)?;
    Network::new(heads, config.n_heads, config.sharing(), classifier)
}

/// A network with its configuration, optimizer state and training history.
pub struct TrainedModel {
    pub config: ModelConfig,
    pub input_shape: [usize; 3],
    pub network: Network<f32>,
    pub adam: AdamState<f32>,
    pub history: Vec<EpochStats>,
}

impl std::fmt::Debug for TrainedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainedModel")
            .field("config", &self.config)
            .field("input_shape", &self.input_shape)
            .field("parameters", &self.network.parameter_count())
            .field("epochs_ran", &self.history.len())
            .finish()
    }
}

pub fn build_model(config: &ModelConfig, input_shape: [usize; 3]) -> Result<TrainedModel> {
    let network = build_network::<f32>(config, input_shape)?;
    let adam = AdamState::new(config.adam(), network.parameter_count())?;
    Ok(TrainedModel {
        config: config.clone(),
        input_shape,
        network,
        adam,
        history: Vec::new(),
    })
}

impl TrainedModel {
    pub fn epochs_ran(&self) -> usize {
        self.history.len()
    }

    /// Flat copy of every parameter, in registration order.
    pub fn parameters(&self) -> Vec<f32> {
        self.network
            .params()
            .iter()
            .flat_map(|p| p.data().iter().copied())
            .collect()
    }

    pub(crate) fn check_inputs(&self, inputs: &[Image]) -> Result<()> {
        if inputs.len() != self.config.n_heads {
            return Err(Error::shape(
                "model input",
                format!("{} images for a {}-head model", inputs.len(), self.config.n_heads),
            ));
        }
        if let Some(img) = inputs.iter().find(|i| i.shape() != self.input_shape) {
            return Err(Error::shape(
                "model input",
                format!("image {:?} does not match model input {:?}", img.shape(), self.input_shape),
            ));
        }
        Ok(())
    }
}
