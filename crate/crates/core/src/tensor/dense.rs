use super::gemm::{gemm, Mat};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

fn check<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>, bias: &Tensor<T>) -> Result<(usize, usize, usize)> {
    input.expect_rank("dense", 2)?;
    weights.expect_rank("dense", 2)?;
    let (n, d) = (input.shape()[0], input.shape()[1]);
    let (wd, u) = (weights.shape()[0], weights.shape()[1]);
    if wd != d {
        return Err(Error::shape(
            "dense",
            format!("input has {d} features, weights expect {wd}"),
        ));
    }
    if bias.shape() != [u] {
        return Err(Error::shape(
            "dense",
            format!("bias shape {:?}, expected [{u}]", bias.shape()),
        ));
    }
    Ok((n, d, u))
}

/// `input · weights + bias` for `input [N,D]`, `weights [D,U]`.
pub fn dense_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (n, d, u) = check(input, weights, bias)?;
    let mut out = Tensor::zeros([n, u]);
    for row in out.data_mut().chunks_exact_mut(u) {
        row.copy_from_slice(bias.data());
    }
    if n == 1 {
        // a single row streams the weights once instead of packing them
        let y = out.data_mut();
        for (&x, w) in input.data().iter().zip(weights.data().chunks_exact(u)) {
            if x != T::zero() {
                for (o, &wv) in y.iter_mut().zip(w) {
                    *o += x * wv;
                }
            }
        }
        return Ok(out);
    }
    gemm(n, d, u, Mat::n(input.data()), Mat::n(weights.data()), T::one(), out.data_mut());
    Ok(out)
}

/// Accumulates `dW += xᵀ·dy`, `db += Σ dy` and returns `dx = dy·Wᵀ` when asked.
pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
    dw: &mut [T],
    db: &mut [T],
    want_input_grad: bool,
) -> Result<Option<Tensor<T>>> {
    let (n, d) = (input.shape()[0], input.shape()[1]);
    let u = weights.shape()[1];
    if grad_out.shape() != [n, u] || dw.len() != d * u || db.len() != u {
        return Err(Error::shape(
            "dense_backward",
            format!("grad {:?} for input [{n},{d}] and {u} units", grad_out.shape()),
        ));
    }
    if n == 1 {
        return Ok(dense_backward_row(input, weights, grad_out, dw, db, want_input_grad));
    }
    gemm(d, n, u, Mat::t(input.data()), Mat::n(grad_out.data()), T::one(), dw);
    for row in grad_out.data().chunks_exact(u) {
        for (b, &g) in db.iter_mut().zip(row) {
            *b += g;
        }
    }
    if !want_input_grad {
        return Ok(None);
    }
    let mut gi = Tensor::zeros([n, d]);
    gemm(n, u, d, Mat::n(grad_out.data()), Mat::t(weights.data()), T::zero(), gi.data_mut());
    Ok(Some(gi))
}

/// Single-row backward: one pass over the weights updates `dW` and forms `dx`.
fn dense_backward_row<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
    dw: &mut [T],
    db: &mut [T],
    want_input_grad: bool,
) -> Option<Tensor<T>> {
    let (d, u) = (input.len(), grad_out.len());
    let g = grad_out.data();
    for (b, &gv) in db.iter_mut().zip(g) {
        *b += gv;
    }
    let mut gi = want_input_grad.then(|| Tensor::zeros([1, d]));
    let rows = weights.data().chunks_exact(u).zip(dw.chunks_exact_mut(u));
    for (i, (&x, (w, dwr))) in input.data().iter().zip(rows).enumerate() {
        if x != T::zero() {
            for (a, &gv) in dwr.iter_mut().zip(g) {
                *a += x * gv;
            }
        }
        if let Some(gi) = gi.as_mut() {
            let mut acc = T::zero();
            for (&wv, &gv) in w.iter().zip(g) {
                acc += wv * gv;
            }
            gi.data_mut()[i] = acc;
        }
    }
    gi
}
