use serde::{Deserialize, Serialize};

use super::layer::{Cache, Mode, Sequential};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Whether the convolutional heads of a multi-input network share weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadSharing {
    Separate,
    Shared,
}

struct Trace<T> {
    head_caches: Vec<Vec<Cache<T>>>,
    head_channels: Vec<usize>,
    spatial: [usize; 3],
    classifier_caches: Vec<Cache<T>>,
}

/// One or more convolutional heads whose final feature maps are concatenated
/// along channels and fed to a shared classifier.
///
/// With a single input this is a plain sequential CNN. The forward pass keeps
/// the intermediates the next [`Network::backward`] call needs.
pub struct Network<T> {
    heads: Vec<Sequential<T>>,
    inputs: usize,
    classifier: Sequential<T>,
    trace: Option<Trace<T>>,
}

impl<T: Scalar> Network<T> {
    /// `heads` holds one stack per input, or a single stack reused for every
    /// input when `sharing` is [`HeadSharing::Shared`].
    pub fn new(
        heads: Vec<Sequential<T>>,
        inputs: usize,
        sharing: HeadSharing,
        classifier: Sequential<T>,
    ) -> Result<Self> {
        let expected = match sharing {
            HeadSharing::Separate => inputs,
            HeadSharing::Shared => 1,
        };
        if inputs == 0 || heads.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{} head stacks for {inputs} inputs with {sharing:?} weights",
                heads.len()
            )));
        }
        Ok(Network {
            heads,
            inputs,
            classifier,
            trace: None,
        })
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn sharing(&self) -> HeadSharing {
        if self.heads.len() == self.inputs {
            HeadSharing::Separate
        } else {
            HeadSharing::Shared
        }
    }

    pub fn head(&self, input: usize) -> &Sequential<T> {
        &self.heads[input.min(self.heads.len() - 1)]
    }

    pub fn heads(&self) -> &[Sequential<T>] {
        &self.heads
    }

    pub fn classifier(&self) -> &Sequential<T> {
        &self.classifier
    }

    fn check_inputs(&self, inputs: &[Tensor<T>]) -> Result<()> {
        if inputs.len() != self.inputs {
            return Err(Error::shape(
                "network",
                format!("{} inputs for a {}-input network", inputs.len(), self.inputs),
            ));
        }
        Ok(())
    }

    fn concat(outputs: Vec<Tensor<T>>) -> Result<(Tensor<T>, Vec<usize>, [usize; 3])> {
        let first = outputs[0].shape().to_vec();
        if first.len() != 4 {
            return Err(Error::shape("concat", format!("head output {first:?} is not NHWC")));
        }
        let spatial = [first[0], first[1], first[2]];
        let channels: Vec<usize> = outputs.iter().map(|o| o.shape()[3]).collect();
        if outputs.iter().any(|o| o.shape()[..3] != spatial) {
            return Err(Error::shape(
                "concat",
                "head outputs disagree on batch or spatial size",
            ));
        }
        if outputs.len() == 1 {
            let out = outputs.into_iter().next().expect("one output");
            return Ok((out, channels, spatial));
        }
        let total: usize = channels.iter().sum();
        let positions = spatial.iter().product::<usize>();
        let mut data = Vec::with_capacity(positions * total);
        for p in 0..positions {
            for (o, &c) in outputs.iter().zip(&channels) {
                data.extend_from_slice(&o.data()[p * c..(p + 1) * c]);
            }
        }
        let merged = Tensor::new([spatial[0], spatial[1], spatial[2], total], data)?;
        Ok((merged, channels, spatial))
    }

    fn split(grad: Tensor<T>, channels: &[usize], spatial: [usize; 3]) -> Vec<Tensor<T>> {
        if channels.len() == 1 {
            return vec![grad];
        }
        let total: usize = channels.iter().sum();
        let positions = spatial.iter().product::<usize>();
        let mut parts: Vec<Vec<T>> = channels.iter().map(|&c| Vec::with_capacity(positions * c)).collect();
        for row in grad.data().chunks_exact(total) {
            let mut off = 0;
            for (part, &c) in parts.iter_mut().zip(channels) {
                part.extend_from_slice(&row[off..off + c]);
                off += c;
            }
        }
        parts
            .into_iter()
            .zip(channels)
            .map(|(d, &c)| {
                Tensor::new([spatial[0], spatial[1], spatial[2], c], d).expect("split preserves size")
            })
            .collect()
    }

    /// Forward pass that records intermediates for [`Network::backward`].
    pub fn forward(&mut self, inputs: Vec<Tensor<T>>, mode: &mut Mode<'_>) -> Result<Tensor<T>> {
        self.trace = None;
        self.check_inputs(&inputs)?;
        let mut outputs = Vec::with_capacity(inputs.len());
        let mut head_caches = Vec::with_capacity(inputs.len());
        for (i, x) in inputs.into_iter().enumerate() {
            let (y, caches) = self.head(i).forward(x, mode)?;
            outputs.push(y);
            head_caches.push(caches);
        }
        let (merged, head_channels, spatial) = Self::concat(outputs)?;
        let (logits, classifier_caches) = self.classifier.forward(merged, mode)?;
        self.trace = Some(Trace {
            head_caches,
            head_channels,
            spatial,
            classifier_caches,
        });
        Ok(logits)
    }

    /// Inference without recording anything; dropout is inactive.
    pub fn infer(&self, inputs: Vec<Tensor<T>>) -> Result<Tensor<T>> {
        self.check_inputs(&inputs)?;
        let outputs = inputs
            .into_iter()
            .enumerate()
            .map(|(i, x)| self.head(i).forward(x, &mut Mode::Infer).map(|r| r.0))
            .collect::<Result<Vec<_>>>()?;
        let (merged, _, _) = Self::concat(outputs)?;
        Ok(self.classifier.forward(merged, &mut Mode::Infer)?.0)
    }

    /// Reverse-mode pass from the gradient of the loss with respect to the
    /// logits. Parameter gradients are added onto each tensor's gradient
    /// buffer, so several forward/backward pairs accumulate.
    pub fn backward(&mut self, grad_logits: Tensor<T>) -> Result<()> {
        let trace = self.trace.take().ok_or(Error::NoForwardCache)?;
        let grad = self
            .classifier
            .backward(trace.classifier_caches, grad_logits, true)?
            .expect("classifier input gradient requested");
        let parts = Self::split(grad, &trace.head_channels, trace.spatial);
        let shared = self.heads.len() == 1;
        for (i, (caches, g)) in trace.head_caches.into_iter().zip(parts).enumerate() {
            let head = if shared { &mut self.heads[0] } else { &mut self.heads[i] };
            head.backward(caches, g, false)?;
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.heads
            .iter()
            .flat_map(Sequential::params)
            .chain(self.classifier.params())
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out: Vec<&mut Tensor<T>> = Vec::new();
        for h in &mut self.heads {
            out.extend(h.params_mut());
        }
        out.extend(self.classifier.params_mut());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let cast_seq = |s: &Sequential<T>| Sequential {
            layers: s
                .layers
                .iter()
                .map(|l| {
                    use super::layer::Layer as L;
                    match l {
                        L::Conv2d {
                            weights,
                            bias,
                            stride,
                            padding,
                        } => L::Conv2d {
                            weights: weights.cast(),
                            bias: bias.cast(),
                            stride: *stride,
                            padding: *padding,
                        },
                        L::Dense { weights, bias } => L::Dense {
                            weights: weights.cast(),
                            bias: bias.cast(),
                        },
                        L::Maxpool => L::Maxpool,
                        L::Relu => L::Relu,
                        L::Flatten => L::Flatten,
                        L::Dropout { rate } => L::Dropout { rate: *rate },
                    }
                })
                .collect(),
        };
        Network {
            heads: self.heads.iter().map(cast_seq).collect(),
            inputs: self.inputs,
            classifier: cast_seq(&self.classifier),
            trace: None,
        }
    }
}

impl<T: Scalar> Clone for Network<T> {
    fn clone(&self) -> Self {
        Network {
            heads: self.heads.clone(),
            inputs: self.inputs,
            classifier: self.classifier.clone(),
            trace: None,
        }
    }
}

impl<T: Scalar> std::fmt::Debug for Network<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("heads", &self.heads.len())
            .field("inputs", &self.inputs)
            .field("parameters", &self.parameter_count())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use crate::tensor::{LayerSpec, Padding};

    fn head(rng: &mut crate::rng::Rng, filters: usize) -> Sequential<f64> {
        Sequential::build(
            &[
                LayerSpec::Conv2d {
                    filters,
                    kernel: 3,
                    stride: 1,
                    padding: Padding::Same,
                },
                LayerSpec::Relu,
                LayerSpec::Maxpool,
            ],
            &[4, 6, 1],
            rng,
        )
        .unwrap()
    }

    #[test]
    fn backward_without_forward_errors() {
        let mut rng = stream(0, Purpose::Test, 0);
        let h = head(&mut rng, 2);
        let c = Sequential::build(&[LayerSpec::Flatten, LayerSpec::Dense { units: 2 }], &[2, 3, 2], &mut rng)
            .unwrap();
        let mut net = Network::new(vec![h], 1, HeadSharing::Separate, c).unwrap();
        assert!(matches!(
            net.backward(Tensor::zeros([1, 2])),
            Err(Error::NoForwardCache)
        ));
    }

    #[test]
    fn concat_then_split_round_trips() {
        let a = Tensor::<f64>::from_fn([2, 2, 3, 2], |i| i as f64);
        let b = Tensor::<f64>::from_fn([2, 2, 3, 3], |i| -(i as f64));
        let (m, ch, sp) = Network::concat(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(m.shape(), &[2, 2, 3, 5]);
        let parts = Network::split(m, &ch, sp);
        assert_eq!(parts, vec![a, b]);
    }

    #[test]
    fn shared_heads_accumulate_into_one_stack() {
        let mut rng = stream(0, Purpose::Test, 0);
        let h = head(&mut rng, 2);
        let c = Sequential::build(&[LayerSpec::Flatten, LayerSpec::Dense { units: 2 }], &[2, 3, 4], &mut rng)
            .unwrap();
        let mut net = Network::new(vec![h], 2, HeadSharing::Shared, c).unwrap();
        let x = || Tensor::from_fn([1, 4, 6, 1], |i| (i as f64 * 0.7).cos());
        let logits = net.forward(vec![x(), x()], &mut Mode::Infer).unwrap();
        assert_eq!(logits.shape(), &[1, 2]);
        net.backward(Tensor::new([1, 2], vec![1.0, -1.0]).unwrap()).unwrap();
        assert!(net.heads[0].params()[0].grad().is_some());
    }
}
