use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Mean softmax cross-entropy over the batch and its gradient with respect to
/// the logits, `(softmax - onehot) / N`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(T, Tensor<T>)> {
    logits.expect_rank("softmax_cross_entropy", 2)?;
    let (n, k) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != n {
        return Err(Error::shape(
            "softmax_cross_entropy",
            format!("{} labels for a batch of {n}", labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {k} classes"
        )));
    }
    let inv_n = T::one() / T::of(n as f64);
    let mut grad = Tensor::zeros([n, k]);
    let mut total = T::zero();
    for ((row, g), &label) in logits
        .data()
        .chunks_exact(k)
        .zip(grad.data_mut().chunks_exact_mut(k))
        .zip(labels)
    {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for (gv, &z) in g.iter_mut().zip(row) {
            *gv = (z - max).exp();
            sum += *gv;
        }
        total += sum.ln() - (row[label] - max);
        for gv in g.iter_mut() {
            *gv = *gv / sum * inv_n;
        }
        g[label] -= inv_n;
    }
    let loss = total * inv_n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("softmax_cross_entropy".into()));
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_k() {
        for k in [2usize, 3, 13] {
            let logits = Tensor::<f64>::from_fn([4, k], |_| 0.3);
            let (loss, _) = softmax_cross_entropy(&logits, &[0, 1, 0, 1]).unwrap();
            assert!((loss - (k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_true_class_has_negligible_loss() {
        let logits = Tensor::<f64>::new([1, 3], vec![0.0, 100.0, 0.0]).unwrap();
        let (loss, _) = softmax_cross_entropy(&logits, &[1]).unwrap();
        assert!(loss < 1e-6);
    }

    #[test]
    fn label_out_of_range() {
        let logits = Tensor::<f32>::zeros([1, 3]);
        assert!(softmax_cross_entropy(&logits, &[3]).is_err());
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let logits = Tensor::<f64>::from_fn([3, 4], |i| (i as f64 * 0.37).sin());
        let (_, g) = softmax_cross_entropy(&logits, &[0, 3, 2]).unwrap();
        for row in g.data().chunks(4) {
            assert!(row.iter().sum::<f64>().abs() < 1e-15);
        }
    }
}
