use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Flat input index of the maximum for every pooled output element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolIndices {
    pub input_shape: Vec<usize>,
    pub argmax: Vec<usize>,
}

/// 2×2 max pooling with stride 2. A trailing odd row or column is dropped.
pub fn maxpool2x2_forward<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, PoolIndices)> {
    input.expect_rank("maxpool2x2", 4)?;
    let &[n, h, w, c] = input.shape() else { unreachable!() };
    if h < 2 || w < 2 {
        return Err(Error::shape(
            "maxpool2x2",
            format!("spatial size {h}x{w} is smaller than the 2x2 window"),
        ));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros([n, oh, ow, c]);
    let mut argmax = vec![0usize; n * oh * ow * c];
    let src = input.data();
    let dst = out.data_mut();
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let o = ((b * oh + oy) * ow + ox) * c;
                let base = ((b * h + 2 * oy) * w + 2 * ox) * c;
                let row = w * c;
                let (a, b2) = (&src[base..base + c], &src[base + c..base + 2 * c]);
                let (c0, d) = (&src[base + row..base + row + c], &src[base + row + c..base + row + 2 * c]);
                let out_px = &mut dst[o..o + c];
                let arg_px = &mut argmax[o..o + c];
                for ch in 0..c {
                    // strict comparison keeps the first maximum on ties
                    let (mut best, mut at) = (a[ch], base + ch);
                    if b2[ch] > best {
                        (best, at) = (b2[ch], base + c + ch);
                    }
                    if c0[ch] > best {
                        (best, at) = (c0[ch], base + row + ch);
                    }
                    if d[ch] > best {
                        (best, at) = (d[ch], base + row + c + ch);
                    }
                    out_px[ch] = best;
                    arg_px[ch] = at;
                }
            }
        }
    }
    Ok((
        out,
        PoolIndices {
            input_shape: input.shape().to_vec(),
            argmax,
        },
    ))
}

/// Routes each output gradient to the input position that won the max.
pub fn maxpool2x2_backward<T: Scalar>(
    indices: &PoolIndices,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    if grad_out.len() != indices.argmax.len() {
        return Err(Error::shape(
            "maxpool2x2_backward",
            format!(
                "gradient has {} elements, pooling produced {}",
                grad_out.len(),
                indices.argmax.len()
            ),
        ));
    }
    let mut grad_in = Tensor::zeros(indices.input_shape.clone());
    let gi = grad_in.data_mut();
    for (&idx, &g) in indices.argmax.iter().zip(grad_out.data()) {
        gi[idx] += g;
    }
    Ok(grad_in)
}
