use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TrainedModel;
use crate::error::{Error, Result};
use crate::preprocess::Image;
use crate::rng::{stream, Purpose};
use crate::tensor::{softmax_cross_entropy, FlushDenormals, Mode, Tensor};

/// One training example: an image per head and a class index. The `id`
/// fixes the example's position independent of the order it was supplied in.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: u64,
    pub inputs: Vec<Image>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss, with dropout active.
    pub loss: f64,
    /// Fraction of training examples whose training-mode logits were correct.
    pub accuracy: f64,
}

fn tensors(inputs: &[Image]) -> Vec<Tensor> {
    inputs.iter().map(Image::to_tensor).collect()
}

fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mini-batch Adam on softmax cross-entropy.
///
/// Each epoch visits the examples in an order drawn from `(seed, epoch)`,
/// applied to the examples sorted by id. Examples within a batch run one at a
/// time and their gradients are summed in batch order, scaled by one over the
/// batch size. Training ends after `epochs`, or earlier on a loss plateau or
/// on reaching `stop_at_loss`.
pub fn train(model: &mut TrainedModel, data: &[Example]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    for ex in data {
        if ex.label >= model.config.n_classes {
            return Err(Error::Data(format!(
                "example {} has label {} but the model has {} classes",
                ex.id, ex.label, model.config.n_classes
            )));
        }
        model.check_inputs(&ex.inputs)?;
    }
    let _flush = FlushDenormals::new();
    let mut sorted: Vec<&Example> = data.iter().collect();
    sorted.sort_by_key(|e| e.id);

    let cfg = model.config.clone();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let start = model.history.len();
    for epoch in start..cfg.epochs {
        let mut order: Vec<usize> = (0..sorted.len()).collect();
        order.shuffle(&mut stream(cfg.seed, Purpose::Shuffle, epoch as u64));
        let mut dropout_rng = stream(cfg.seed, Purpose::Dropout, epoch as u64);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            model.network.zero_grad();
            let scale = 1.0 / batch.len() as f32;
            for &i in batch {
                let ex = sorted[i];
                let logits = model
                    .network
                    .forward(tensors(&ex.inputs), &mut Mode::Train(&mut dropout_rng))?;
                if argmax(logits.data()) == ex.label {
                    correct += 1;
                }
                let (loss, mut grad) = softmax_cross_entropy(&logits, &[ex.label])?;
                loss_sum += loss as f64;
                for g in grad.data_mut() {
                    *g *= scale;
                }
                model.network.backward(grad)?;
            }
            model.adam.step(&mut model.network.params_mut())?;
        }
        let stats = EpochStats {
            epoch,
            loss: loss_sum / sorted.len() as f64,
            accuracy: correct as f64 / sorted.len() as f64,
        };
        log::debug!("epoch {epoch}: loss {:.5} accuracy {:.4}", stats.loss, stats.accuracy);
        model.history.push(stats);

        if cfg.stop_at_loss.is_some_and(|t| stats.loss <= t) {
            break;
        }
        if stats.loss < best - cfg.min_delta {
            best = stats.loss;
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }
    Ok(())
}

/// Arg-max class for each sample (a slice of per-head images).
pub fn predict(model: &TrainedModel, samples: &[Vec<Image>]) -> Result<Vec<usize>> {
    let _flush = FlushDenormals::new();
    samples
        .iter()
        .map(|inputs| {
            model.check_inputs(inputs)?;
            let logits = model.network.infer(tensors(inputs))?;
            Ok(argmax(logits.data()))
        })
        .collect()
}

/// Fraction of examples classified correctly, with dropout off.
pub fn evaluate_accuracy(model: &TrainedModel, data: &[Example]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    let _flush = FlushDenormals::new();
    let mut correct = 0;
    for ex in data {
        model.check_inputs(&ex.inputs)?;
        let logits = model.network.infer(tensors(&ex.inputs))?;
        if argmax(logits.data()) == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
