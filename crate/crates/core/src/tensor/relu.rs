use super::{Scalar, Tensor};
use crate::error::{Error, Result};

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let mut out = input.clone();
    for v in out.data_mut() {
        if !(*v > T::zero()) {
            *v = T::zero();
        }
    }
    out
}

/// Passes gradient where the forward output was positive; the subgradient at
/// zero is taken as zero.
pub fn relu_backward<T: Scalar>(output: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if output.shape() != grad_out.shape() {
        return Err(Error::shape(
            "relu_backward",
            format!("{:?} vs {:?}", output.shape(), grad_out.shape()),
        ));
    }
    let mut g = grad_out.clone();
    for (gv, &o) in g.data_mut().iter_mut().zip(output.data()) {
        if o <= T::zero() {
            *gv = T::zero();
        }
    }
    Ok(g)
}

/// Clamps `input` in place and returns it with a mask of the positions that
/// stayed positive.
pub(crate) fn relu_owned<T: Scalar>(mut input: Tensor<T>) -> (Tensor<T>, Vec<bool>) {
    let mut mask = Vec::with_capacity(input.len());
    for v in input.data_mut() {
        let keep = *v > T::zero();
        if !keep {
            *v = T::zero();
        }
        mask.push(keep);
    }
    (input, mask)
}

pub(crate) fn relu_mask_backward<T: Scalar>(mask: &[bool], mut grad: Tensor<T>) -> Result<Tensor<T>> {
    if mask.len() != grad.len() {
        return Err(Error::shape(
            "relu_backward",
            format!("mask has {} elements, gradient {}", mask.len(), grad.len()),
        ));
    }
    for (g, &keep) in grad.data_mut().iter_mut().zip(mask) {
        if !keep {
            *g = T::zero();
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_negatives() {
        let x = Tensor::<f32>::new([3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn gradient_is_step_function() {
        let x = Tensor::<f32>::new([3], vec![-1.0, 0.0, 2.0]).unwrap();
        let y = relu(&x);
        let g = relu_backward(&y, &Tensor::new([3], vec![1.0; 3]).unwrap()).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
    }
}
