use serde::{Deserialize, Serialize};

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// Adam moments for a fixed set of parameters, flattened in registration
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step_count: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
    beta1_power: f64,
    beta2_power: f64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, parameter_count: usize) -> Result<Self> {
        config.validate()?;
        Ok(AdamState {
            config,
            step_count: 0,
            m: vec![T::zero(); parameter_count],
            v: vec![T::zero(); parameter_count],
            beta1_power: 1.0,
            beta2_power: 1.0,
        })
    }

    /// Rebuilds a saved state. The bias-correction powers are recomputed by
    /// the same repeated multiplication `step` uses, so resuming is exact.
    pub fn from_parts(config: AdamConfig, step_count: u64, m: Vec<T>, v: Vec<T>) -> Result<Self> {
        config.validate()?;
        if m.len() != v.len() {
            return Err(Error::shape(
                "adam_state",
                format!("{} first moments, {} second moments", m.len(), v.len()),
            ));
        }
        let (mut beta1_power, mut beta2_power) = (1.0, 1.0);
        for _ in 0..step_count {
            beta1_power *= config.beta1;
            beta2_power *= config.beta2;
        }
        Ok(AdamState {
            config,
            step_count,
            m,
            v,
            beta1_power,
            beta2_power,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.m.len()
    }

    /// One bias-corrected update over every tensor, using the gradients
    /// stored on the tensors themselves.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>]) -> Result<()> {
        let total: usize = params.iter().map(|p| p.len()).sum();
        if total != self.m.len() {
            return Err(Error::shape(
                "adam_step",
                format!("{total} parameters, optimizer tracks {}", self.m.len()),
            ));
        }
        let coeffs = self.advance();
        let mut offset = 0;
        for p in params.iter_mut() {
            let len = p.len();
            let (values, grads) = p.data_and_grad_mut();
            update(
                coeffs,
                values,
                grads,
                &mut self.m[offset..offset + len],
                &mut self.v[offset..offset + len],
            );
            offset += len;
        }
        Ok(())
    }

    fn advance(&mut self) -> Coeffs<T> {
        self.step_count += 1;
        self.beta1_power *= self.config.beta1;
        self.beta2_power *= self.config.beta2;
        Coeffs {
            lr: T::of(self.config.learning_rate),
            beta1: T::of(self.config.beta1),
            beta2: T::of(self.config.beta2),
            one_minus_beta1: T::of(1.0 - self.config.beta1),
            one_minus_beta2: T::of(1.0 - self.config.beta2),
            correction1: T::of(1.0 - self.beta1_power),
            correction2: T::of(1.0 - self.beta2_power),
            epsilon: T::of(self.config.epsilon),
        }
    }
}

#[derive(Clone, Copy)]
struct Coeffs<T> {
    lr: T,
    beta1: T,
    beta2: T,
    one_minus_beta1: T,
    one_minus_beta2: T,
    correction1: T,
    correction2: T,
    epsilon: T,
}

fn update<T: Scalar>(c: Coeffs<T>, params: &mut [T], grads: &[T], m: &mut [T], v: &mut [T]) {
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m).zip(v) {
        *m = c.beta1 * *m + c.one_minus_beta1 * g;
        *v = c.beta2 * *v + c.one_minus_beta2 * g * g;
        let m_hat = *m / c.correction1;
        let v_hat = *v / c.correction2;
        *p -= c.lr * m_hat / (v_hat.sqrt() + c.epsilon);
    }
}

/// Adam update on a single flat parameter buffer.
pub fn adam_step<T: Scalar>(params: &mut [T], grads: &[T], state: &mut AdamState<T>) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(
            "adam_step",
            format!(
                "params {}, grads {}, state {}",
                params.len(),
                grads.len(),
                state.m.len()
            ),
        ));
    }
    let c = state.advance();
    update(c, params, grads, &mut state.m, &mut state.v);
    Ok(())
}
