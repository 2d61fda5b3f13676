use rand::Rng;

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Which elements survived, and the factor survivors were scaled by.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub keep: Vec<bool>,
    pub scale: f64,
}

/// Inverted dropout: in training each element is zeroed with probability
/// `rate` and survivors are scaled by `1/(1-rate)`; in inference it is the
/// identity.
pub fn dropout_apply<T: Scalar, R: Rng + ?Sized>(
    input: &Tensor<T>,
    rate: f64,
    rng: &mut R,
    training: bool,
) -> Result<(Tensor<T>, DropoutMask)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((
            input.clone(),
            DropoutMask {
                keep: vec![true; input.len()],
                scale: 1.0,
            },
        ));
    }
    let scale = 1.0 / (1.0 - rate);
    let s = T::of(scale);
    let mut out = input.clone();
    let mut keep = Vec::with_capacity(input.len());
    for v in out.data_mut() {
        let k = rng.gen::<f64>() >= rate;
        keep.push(k);
        *v = if k { *v * s } else { T::zero() };
    }
    Ok((out, DropoutMask { keep, scale }))
}

pub fn dropout_backward<T: Scalar>(mask: &DropoutMask, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if mask.keep.len() != grad_out.len() {
        return Err(Error::shape(
            "dropout_backward",
            format!("mask {} vs gradient {}", mask.keep.len(), grad_out.len()),
        ));
    }
    let s = T::of(mask.scale);
    let mut g = grad_out.clone();
    for (v, &k) in g.data_mut().iter_mut().zip(&mask.keep) {
        *v = if k { *v * s } else { T::zero() };
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn zero_rate_is_identity() {
        let x = Tensor::<f32>::from_fn([10], |i| i as f32);
        let (y, m) = dropout_apply(&x, 0.0, &mut stream(0, Purpose::Test, 0), true).unwrap();
        assert_eq!(y, x);
        assert!(m.keep.iter().all(|&k| k));
    }

    #[test]
    fn inference_is_identity() {
        let x = Tensor::<f32>::from_fn([10], |i| i as f32);
        let (y, _) = dropout_apply(&x, 0.7, &mut stream(0, Purpose::Test, 0), false).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn rate_one_rejected() {
        let x = Tensor::<f32>::zeros([3]);
        assert!(dropout_apply(&x, 1.0, &mut stream(0, Purpose::Test, 0), true).is_err());
        assert!(dropout_apply(&x, -0.1, &mut stream(0, Purpose::Test, 0), true).is_err());
    }

    #[test]
    fn survivor_fraction_and_mean_are_preserved() {
        let n = 100_000;
        let x = Tensor::<f64>::from_fn([n], |i| 1.0 + (i % 7) as f64);
        let (y, m) = dropout_apply(&x, 0.5, &mut stream(11, Purpose::Test, 0), true).unwrap();
        let frac = m.keep.iter().filter(|&&k| k).count() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "survivor fraction {frac}");
        let mean_in = x.data().iter().sum::<f64>() / n as f64;
        let mean_out = y.data().iter().sum::<f64>() / n as f64;
        assert!((mean_out / mean_in - 1.0).abs() < 0.01, "{mean_in} vs {mean_out}");
    }
}
