//! Naive nested-loop versions of the layer kernels, written independently
//! of the library's im2col and gemm paths.

use rand::Rng;
use ts2img::tensor::{Scalar, Tensor};

pub fn random_tensor<T: Scalar>(shape: &[usize], rng: &mut impl Rng) -> Tensor<T> {
    Tensor::from_fn(shape.to_vec(), |_| T::of(rng.gen_range(-1.0..1.0)))
}

pub fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>, pad: usize) -> Vec<f64> {
    let (n, h, wd, cin) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (k, cout) = (w.shape()[0], w.shape()[3]);
    let oh = h + 2 * pad - k + 1;
    let ow = wd + 2 * pad - k + 1;
    let mut out = vec![0.0; n * oh * ow * cout];
    for bi in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for co in 0..cout {
                    let mut acc = b.data()[co];
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy + ky) as isize - pad as isize;
                            let ix = (ox + kx) as isize - pad as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                continue;
                            }
                            for ci in 0..cin {
                                let xv = x.data()[((bi * h + iy as usize) * wd + ix as usize) * cin + ci];
                                let wv = w.data()[((ky * k + kx) * cin + ci) * cout + co];
                                acc += xv * wv;
                            }
                        }
                    }
                    out[((bi * oh + oy) * ow + ox) * cout + co] = acc;
                }
            }
        }
    }
    out
}

pub fn naive_pool(x: &Tensor<f64>) -> Vec<f64> {
    let (n, h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let mut out = Vec::new();
    for bi in 0..n {
        for oy in 0..h / 2 {
            for ox in 0..w / 2 {
                for ch in 0..c {
                    let mut m = f64::NEG_INFINITY;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            m = m.max(x.data()[((bi * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch]);
                        }
                    }
                    out.push(m);
                }
            }
        }
    }
    out
}

pub fn naive_dense(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
    let (n, d, u) = (x.shape()[0], x.shape()[1], w.shape()[1]);
    let mut out = vec![0.0; n * u];
    for i in 0..n {
        for j in 0..u {
            let mut acc = b.data()[j];
            for k in 0..d {
                acc += x.data()[i * d + k] * w.data()[k * u + j];
            }
            out[i * u + j] = acc;
        }
    }
    out
}

pub fn max_abs_diff(a: &[f32], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x as f64 - y).abs()).fold(0.0, f64::max)
}
