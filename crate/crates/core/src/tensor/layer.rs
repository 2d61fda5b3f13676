use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::conv::{conv2d_backward_accumulate, conv2d_forward_geometry, ConvGeometry};
use super::dense::{dense_backward, dense_forward};
use super::dropout::{dropout_apply, dropout_backward, DropoutMask};
use super::pool::{maxpool2x2_backward, maxpool2x2_forward, PoolIndices};
use super::relu::{relu_mask_backward, relu_owned};
use super::{Padding, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Declarative description of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        filters: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
    },
    Maxpool,
    Relu,
    Flatten,
    Dense {
        units: usize,
    },
    Dropout {
        rate: f64,
    },
    SoftmaxCe,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Conv2d {
                filters,
                kernel,
                stride,
                ..
            } if filters == 0 || kernel == 0 || stride == 0 => Err(Error::InvalidArgument(
                format!("conv2d needs positive filters/kernel/stride: {self:?}"),
            )),
            LayerSpec::Dense { units: 0 } => {
                Err(Error::InvalidArgument("dense layer with zero units".into()))
            }
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => Err(
                Error::InvalidArgument(format!("dropout rate {rate} outside [0, 1)")),
            ),
            _ => Ok(()),
        }
    }

    /// Per-sample output shape (no batch dimension) for a per-sample input
    /// shape: `[H, W, C]` for image layers, `[D]` after flattening.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.validate()?;
        let image = |op: &'static str| -> Result<[usize; 3]> {
            match *input {
                [h, w, c] => Ok([h, w, c]),
                _ => Err(Error::shape(op, format!("expected [H,W,C], got {input:?}"))),
            }
        };
        match *self {
            LayerSpec::Conv2d {
                filters,
                kernel,
                stride,
                padding,
            } => {
                let [h, w, c] = image("conv2d")?;
                let g = ConvGeometry::new([h, w, c], &[kernel, kernel, c, filters], stride, padding)?;
                Ok(vec![g.oh, g.ow, filters])
            }
            LayerSpec::Maxpool => {
                let [h, w, c] = image("maxpool2x2")?;
                if h < 2 || w < 2 {
                    return Err(Error::shape(
                        "maxpool2x2",
                        format!("spatial size {h}x{w} is smaller than the 2x2 window"),
                    ));
                }
                Ok(vec![h / 2, w / 2, c])
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Dense { units } => match *input {
                [_] => Ok(vec![units]),
                _ => Err(Error::shape("dense", format!("expected [D], got {input:?}"))),
            },
            LayerSpec::Relu | LayerSpec::Dropout { .. } | LayerSpec::SoftmaxCe => {
                Ok(input.to_vec())
            }
        }
    }
}

/// Whether a forward pass is for training (dropout active) or inference.
pub enum Mode<'a> {
    Train(&'a mut Rng),
    Infer,
}

/// A layer together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Conv2d {
        weights: Tensor<T>,
        bias: Tensor<T>,
        stride: usize,
        padding: Padding,
    },
    Maxpool,
    Relu,
    Flatten,
    Dense {
        weights: Tensor<T>,
        bias: Tensor<T>,
    },
    Dropout {
        rate: f64,
    },
}

/// Whatever a layer's backward pass needs from its forward pass.
#[derive(Debug)]
pub enum Cache<T> {
    Conv {
        geometry: ConvGeometry,
        input: Tensor<T>,
    },
    Pool(PoolIndices),
    Relu(Vec<bool>),
    Flatten(Vec<usize>),
    Dense(Tensor<T>),
    Dropout(DropoutMask),
}

fn he_normal<T: Scalar>(shape: Vec<usize>, fan_in: usize, rng: &mut Rng) -> Tensor<T> {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    Tensor::from_fn(shape, |_| T::of(normal.sample(rng)))
}

impl<T: Scalar> Layer<T> {
    /// Instantiates a layer for a per-sample input shape with He-normal
    /// weights and zero biases.
    pub fn from_spec(spec: &LayerSpec, input: &[usize], rng: &mut Rng) -> Result<Self> {
        spec.output_shape(input)?;
        Ok(match *spec {
            LayerSpec::Conv2d {
                filters,
                kernel,
                stride,
                padding,
            } => {
                let cin = input[2];
                Layer::Conv2d {
                    weights: he_normal(vec![kernel, kernel, cin, filters], kernel * kernel * cin, rng),
                    bias: Tensor::zeros([filters]),
                    stride,
                    padding,
                }
            }
            LayerSpec::Maxpool => Layer::Maxpool,
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::Flatten => Layer::Flatten,
            LayerSpec::Dense { units } => Layer::Dense {
                weights: he_normal(vec![input[0], units], input[0], rng),
                bias: Tensor::zeros([units]),
            },
            LayerSpec::Dropout { rate } => Layer::Dropout { rate },
            LayerSpec::SoftmaxCe => {
                return Err(Error::InvalidArgument(
                    "softmax_ce is a loss head, not a layer".into(),
                ))
            }
        })
    }

    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Conv2d {
                weights,
                stride,
                padding,
                ..
            } => LayerSpec::Conv2d {
                filters: weights.shape()[3],
                kernel: weights.shape()[0],
                stride: *stride,
                padding: *padding,
            },
            Layer::Maxpool => LayerSpec::Maxpool,
            Layer::Relu => LayerSpec::Relu,
            Layer::Flatten => LayerSpec::Flatten,
            Layer::Dense { weights, .. } => LayerSpec::Dense {
                units: weights.shape()[1],
            },
            Layer::Dropout { rate } => LayerSpec::Dropout { rate: *rate },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv2d { .. } => "conv2d",
            Layer::Maxpool => "maxpool2x2",
            Layer::Relu => "relu",
            Layer::Flatten => "flatten",
            Layer::Dense { .. } => "dense",
            Layer::Dropout { .. } => "dropout",
        }
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::Conv2d { weights, bias, .. } | Layer::Dense { weights, bias } => {
                vec![weights, bias]
            }
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Conv2d { weights, bias, .. } | Layer::Dense { weights, bias } => {
                vec![weights, bias]
            }
            _ => Vec::new(),
        }
    }

    pub fn forward(&self, x: Tensor<T>, mode: &mut Mode<'_>) -> Result<(Tensor<T>, Cache<T>)> {
        match self {
            Layer::Conv2d {
                weights,
                bias,
                stride,
                padding,
            } => {
                let (y, geometry) = conv2d_forward_geometry(&x, weights, bias, *stride, *padding)?;
                Ok((y, Cache::Conv { geometry, input: x }))
            }
            Layer::Maxpool => {
                let (y, idx) = maxpool2x2_forward(&x)?;
                Ok((y, Cache::Pool(idx)))
            }
            Layer::Relu => {
                let (y, mask) = relu_owned(x);
                Ok((y, Cache::Relu(mask)))
            }
            Layer::Flatten => {
                let shape = x.shape().to_vec();
                let n = shape[0];
                let d = if n == 0 { 0 } else { x.len() / n };
                Ok((x.reshape([n, d])?, Cache::Flatten(shape)))
            }
            Layer::Dense { weights, bias } => {
                let y = dense_forward(&x, weights, bias)?;
                Ok((y, Cache::Dense(x)))
            }
            Layer::Dropout { rate } => {
                let (y, mask) = match mode {
                    Mode::Train(rng) => dropout_apply(&x, *rate, &mut **rng, true)?,
                    Mode::Infer => dropout_apply(&x, *rate, &mut NoRng, false)?,
                };
                Ok((y, Cache::Dropout(mask)))
            }
        }
    }

    /// Accumulates parameter gradients onto this layer's tensors and returns
    /// the gradient with respect to the layer input when requested.
    pub fn backward(
        &mut self,
        cache: Cache<T>,
        grad: Tensor<T>,
        want_input_grad: bool,
    ) -> Result<Option<Tensor<T>>> {
        match (self, cache) {
            (
                Layer::Conv2d { weights, bias, .. },
                Cache::Conv { geometry, input },
            ) => {
                let mut dw = std::mem::take(weights.grad_mut_vec());
                let mut db = std::mem::take(bias.grad_mut_vec());
                let r = conv2d_backward_accumulate(
                    &geometry,
                    &input,
                    weights,
                    &grad,
                    &mut dw,
                    &mut db,
                    want_input_grad,
                );
                *weights.grad_mut_vec() = dw;
                *bias.grad_mut_vec() = db;
                r
            }
            (Layer::Maxpool, Cache::Pool(idx)) => maxpool2x2_backward(&idx, &grad).map(Some),
            (Layer::Relu, Cache::Relu(mask)) => relu_mask_backward(&mask, grad).map(Some),
            (Layer::Flatten, Cache::Flatten(shape)) => grad.reshape(shape).map(Some),
            (Layer::Dense { weights, bias }, Cache::Dense(x)) => {
                let mut dw = std::mem::take(weights.grad_mut_vec());
                let mut db = std::mem::take(bias.grad_mut_vec());
                let r = dense_backward(&x, weights, &grad, &mut dw, &mut db, want_input_grad);
                *weights.grad_mut_vec() = dw;
                *bias.grad_mut_vec() = db;
                r
            }
            (Layer::Dropout { .. }, Cache::Dropout(mask)) => dropout_backward(&mask, &grad).map(Some),
            (layer, _) => Err(Error::InvalidArgument(format!(
                "cache does not belong to a {} layer",
                layer.name()
            ))),
        }
    }
}

impl<T: Scalar> Tensor<T> {
    pub(crate) fn grad_mut_vec(&mut self) -> &mut Vec<T> {
        let len = self.len();
        self.grad.get_or_insert_with(|| vec![T::zero(); len])
    }
}

/// Inference-mode dropout never draws; this satisfies the `Rng` bound.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("inference dropout does not sample")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("inference dropout does not sample")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("inference dropout does not sample")
    }
    fn try_fill_bytes(&mut self, _: &mut [u8]) -> std::result::Result<(), rand::Error> {
        unreachable!("inference dropout does not sample")
    }
}

/// A straight chain of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequential<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Sequential<T> {
    pub fn build(specs: &[LayerSpec], input: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut shape = input.to_vec();
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            layers.push(Layer::from_spec(spec, &shape, rng)?);
            shape = spec.output_shape(&shape)?;
        }
        Ok(Sequential { layers })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.layers
            .iter()
            .try_fold(input.to_vec(), |s, l| l.spec().output_shape(&s))
    }

    pub fn forward(&self, x: Tensor<T>, mode: &mut Mode<'_>) -> Result<(Tensor<T>, Vec<Cache<T>>)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = x;
        for layer in &self.layers {
            let (y, cache) = layer.forward(x, mode)?;
            if !y.all_finite() {
                return Err(Error::NonFinite(layer.name().into()));
            }
            caches.push(cache);
            x = y;
        }
        Ok((x, caches))
    }

    /// Inference through the first `count` layers only.
    pub fn forward_prefix(&self, x: Tensor<T>, count: usize) -> Result<Tensor<T>> {
        let mut x = x;
        for layer in self.layers.iter().take(count) {
            x = layer.forward(x, &mut Mode::Infer)?.0;
        }
        Ok(x)
    }

    pub fn backward(
        &mut self,
        caches: Vec<Cache<T>>,
        grad: Tensor<T>,
        want_input_grad: bool,
    ) -> Result<Option<Tensor<T>>> {
        if caches.len() != self.layers.len() {
            return Err(Error::NoForwardCache);
        }
        let mut grad = Some(grad);
        for (i, (layer, cache)) in self.layers.iter_mut().zip(caches).enumerate().rev() {
            let g = grad.take().expect("gradient flows to every layer but the first");
            let need = want_input_grad || i > 0;
            grad = layer.backward(cache, g, need)?;
            if let Some(g) = &grad {
                if !g.all_finite() {
                    return Err(Error::NonFinite(format!("{} backward", layer.name())));
                }
            }
        }
        Ok(grad)
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }
}
