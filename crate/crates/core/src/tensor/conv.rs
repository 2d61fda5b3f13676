use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::gemm::{gemm, Mat};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Zero padding so that `out = ceil(in / stride)`.
    Same,
    /// No padding.
    Valid,
}

/// Output length and leading pad along one spatial axis, or `None` when the
/// kernel does not fit.
pub fn conv_output_size(
    input: usize,
    kernel: usize,
    stride: usize,
    padding: Padding,
) -> Option<(usize, usize)> {
    if input == 0 || kernel == 0 || stride == 0 {
        return None;
    }
    match padding {
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            Some((out, total / 2))
        }
        Padding::Valid => (input >= kernel).then(|| ((input - kernel) / stride + 1, 0)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub h: usize,
    pub w: usize,
    pub cin: usize,
    pub k: usize,
    pub cout: usize,
    pub stride: usize,
    pub oh: usize,
    pub ow: usize,
    pub pad_top: usize,
    pub pad_left: usize,
}

impl ConvGeometry {
    pub fn new(
        input_hwc: [usize; 3],
        weight_shape: &[usize],
        stride: usize,
        padding: Padding,
    ) -> Result<Self> {
        let [h, w, cin] = input_hwc;
        let &[kh, kw, wcin, cout] = weight_shape else {
            return Err(Error::shape(
                "conv2d",
                format!("weights must be [K,K,Cin,Cout], got {weight_shape:?}"),
            ));
        };
        if kh != kw {
            return Err(Error::shape("conv2d", format!("non-square kernel {kh}x{kw}")));
        }
        if wcin != cin {
            return Err(Error::shape(
                "conv2d",
                format!("weights expect {wcin} input channels, input has {cin}"),
            ));
        }
        if padding == Padding::Same && kh % 2 == 0 {
            return Err(Error::shape(
                "conv2d",
                format!("'same' padding needs an odd kernel, got {kh}"),
            ));
        }
        let too_small = || {
            Error::shape(
                "conv2d",
                format!("kernel {kh} does not fit input {h}x{w} with {padding:?} padding"),
            )
        };
        let (oh, pad_top) = conv_output_size(h, kh, stride, padding).ok_or_else(too_small)?;
        let (ow, pad_left) = conv_output_size(w, kw, stride, padding).ok_or_else(too_small)?;
        Ok(ConvGeometry {
            h,
            w,
            cin,
            k: kh,
            cout,
            stride,
            oh,
            ow,
            pad_top,
            pad_left,
        })
    }

    pub fn patch_len(&self) -> usize {
        self.k * self.k * self.cin
    }

    pub fn out_pixels(&self) -> usize {
        self.oh * self.ow
    }

    /// Input row/column for output position `o` and kernel tap `kk`, if it
    /// falls inside the (unpadded) input.
    #[inline]
    fn src(o: usize, kk: usize, stride: usize, pad: usize, len: usize) -> Option<usize> {
        (o * stride + kk).checked_sub(pad).filter(|&v| v < len)
    }

    /// Output columns `ox` whose taps all land inside the input, so a whole
    /// kernel row is one contiguous run of `k * cin` values.
    fn interior_x(&self) -> std::ops::Range<usize> {
        if self.stride != 1 {
            return 0..0;
        }
        let lo = self.pad_left;
        let hi = (self.w + self.pad_left + 1).saturating_sub(self.k).min(self.ow);
        lo.min(hi)..hi
    }

    /// Lays out one NHWC image as a `[oh*ow, k*k*cin]` patch matrix.
    pub fn im2col<T: Scalar>(&self, input: &[T], cols: &mut [T]) {
        self.im2col_rows(input, 0..self.out_pixels(), cols);
    }

    /// Patch rows for the output pixels in `pixels` only.
    pub fn im2col_rows<T: Scalar>(&self, input: &[T], pixels: Range<usize>, cols: &mut [T]) {
        let pl = self.patch_len();
        let run = self.cin;
        let wide = self.k * run;
        let inner = self.interior_x();
        for (p, row) in pixels.zip(cols.chunks_exact_mut(pl)) {
            let (oy, ox) = (p / self.ow, p % self.ow);
            for ky in 0..self.k {
                let dst = &mut row[ky * wide..][..wide];
                let Some(y) = Self::src(oy, ky, self.stride, self.pad_top, self.h) else {
                    dst.fill(T::zero());
                    continue;
                };
                let src_row = &input[y * self.w * run..][..self.w * run];
                if inner.contains(&ox) {
                    let x0 = ox - self.pad_left;
                    dst.copy_from_slice(&src_row[x0 * run..][..wide]);
                    continue;
                }
                for (kx, d) in dst.chunks_exact_mut(run).enumerate() {
                    match Self::src(ox, kx, self.stride, self.pad_left, self.w) {
                        Some(x) => d.copy_from_slice(&src_row[x * run..][..run]),
                        None => d.fill(T::zero()),
                    }
                }
            }
        }
    }

    /// Scatter-adds a patch-matrix gradient back onto one image.
    pub fn col2im<T: Scalar>(&self, cols: &[T], grad_input: &mut [T]) {
        self.col2im_rows(cols, 0..self.out_pixels(), grad_input);
    }

    /// `col2im` for the patch rows of the output pixels in `pixels`.
    pub fn col2im_rows<T: Scalar>(&self, cols: &[T], pixels: Range<usize>, grad_input: &mut [T]) {
        let pl = self.patch_len();
        let run = self.cin;
        let wide = self.k * run;
        let inner = self.interior_x();
        for (p, row) in pixels.zip(cols.chunks_exact(pl)) {
            let (oy, ox) = (p / self.ow, p % self.ow);
            for ky in 0..self.k {
                let Some(y) = Self::src(oy, ky, self.stride, self.pad_top, self.h) else {
                    continue;
                };
                let src = &row[ky * wide..][..wide];
                let dst_row = &mut grad_input[y * self.w * run..][..self.w * run];
                if inner.contains(&ox) {
                    let x0 = ox - self.pad_left;
                    for (d, &v) in dst_row[x0 * run..][..wide].iter_mut().zip(src) {
                        *d += v;
                    }
                    continue;
                }
                for (kx, part) in src.chunks_exact(run).enumerate() {
                    let Some(x) = Self::src(ox, kx, self.stride, self.pad_left, self.w) else {
                        continue;
                    };
                    for (d, &v) in dst_row[x * run..][..run].iter_mut().zip(part) {
                        *d += v;
                    }
                }
            }
        }
    }

    /// Output pixels per tile, sized so one tile of patch rows stays in cache.
    fn tile_pixels(&self) -> usize {
        const TILE_VALUES: usize = 1 << 17;
        (TILE_VALUES / self.patch_len().max(1)).max(16).min(self.out_pixels()).max(1)
    }

    fn tiles(&self) -> impl Iterator<Item = Range<usize>> {
        let (n, t) = (self.out_pixels(), self.tile_pixels());
        (0..n).step_by(t).map(move |s| s..(s + t).min(n))
    }
}

fn geometry<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<ConvGeometry> {
    input.expect_rank("conv2d", 4)?;
    let s = input.shape();
    let g = ConvGeometry::new([s[1], s[2], s[3]], weights.shape(), stride, padding)?;
    if bias.shape() != [g.cout] {
        return Err(Error::shape(
            "conv2d",
            format!("bias shape {:?}, expected [{}]", bias.shape(), g.cout),
        ));
    }
    Ok(g)
}

/// Cross-correlation plus bias, NHWC input and `[K,K,Cin,Cout]` weights.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<Tensor<T>> {
    conv2d_forward_geometry(input, weights, bias, stride, padding).map(|(out, _)| out)
}

/// Forward pass that also returns the geometry for the backward pass. Patch
/// rows are built one cache-sized tile at a time.
pub(crate) fn conv2d_forward_geometry<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<(Tensor<T>, ConvGeometry)> {
    let g = geometry(input, weights, bias, stride, padding)?;
    let (n, per_in) = input.batch_dims();
    let (pix, pl) = (g.out_pixels(), g.patch_len());
    let mut tile = vec![T::zero(); g.tile_pixels() * pl];
    let mut out = Tensor::zeros([n, g.oh, g.ow, g.cout]);
    let per_out = pix * g.cout;
    for i in 0..n {
        let x = &input.data()[i * per_in..][..per_in];
        let o = &mut out.data_mut()[i * per_out..][..per_out];
        for row in o.chunks_exact_mut(g.cout) {
            row.copy_from_slice(bias.data());
        }
        for r in g.tiles() {
            let c = &mut tile[..r.len() * pl];
            g.im2col_rows(x, r.clone(), c);
            let o = &mut o[r.start * g.cout..r.end * g.cout];
            gemm(r.len(), pl, g.cout, Mat::n(c), Mat::n(weights.data()), T::one(), o);
        }
    }
    Ok((out, g))
}

/// Gradients of a convolution with respect to its input, weights and bias.
#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<ConvGrads<T>> {
    let g = geometry(input, weights, bias, stride, padding)?;
    let mut dw = Tensor::zeros(weights.shape().to_vec());
    let mut db = Tensor::zeros(bias.shape().to_vec());
    let di = conv2d_backward_accumulate(&g, input, weights, grad_out, dw.data_mut(), db.data_mut(), true)?
        .expect("input gradient requested");
    Ok(ConvGrads {
        input: di,
        weights: dw,
        bias: db,
    })
}

/// Accumulates weight/bias gradients into `dw`/`db` and optionally returns the
/// input gradient. Patch rows are rebuilt from `input` tile by tile.
pub(crate) fn conv2d_backward_accumulate<T: Scalar>(
    g: &ConvGeometry,
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
    dw: &mut [T],
    db: &mut [T],
    want_input_grad: bool,
) -> Result<Option<Tensor<T>>> {
    let n = input.shape()[0];
    if grad_out.shape() != [n, g.oh, g.ow, g.cout] {
        return Err(Error::shape(
            "conv2d_backward",
            format!(
                "grad shape {:?}, expected {:?}",
                grad_out.shape(),
                [n, g.oh, g.ow, g.cout]
            ),
        ));
    }
    let (pix, pl) = (g.out_pixels(), g.patch_len());
    let per_out = pix * g.cout;
    let per_in = g.h * g.w * g.cin;
    let mut grad_input = want_input_grad.then(|| Tensor::zeros(input.shape().to_vec()));
    let mut tile = vec![T::zero(); g.tile_pixels() * pl];
    let mut dtile = if want_input_grad {
        vec![T::zero(); g.tile_pixels() * pl]
    } else {
        Vec::new()
    };
    for i in 0..n {
        let x = &input.data()[i * per_in..][..per_in];
        let go = &grad_out.data()[i * per_out..][..per_out];
        for row in go.chunks_exact(g.cout) {
            for (b, &v) in db.iter_mut().zip(row) {
                *b += v;
            }
        }
        for r in g.tiles() {
            let c = &mut tile[..r.len() * pl];
            g.im2col_rows(x, r.clone(), c);
            let got = &go[r.start * g.cout..r.end * g.cout];
            gemm(pl, r.len(), g.cout, Mat::t(c), Mat::n(got), T::one(), dw);
            if let Some(gi) = grad_input.as_mut() {
                let d = &mut dtile[..r.len() * pl];
                gemm(r.len(), g.cout, pl, Mat::n(got), Mat::t(weights.data()), T::zero(), d);
                g.col2im_rows(d, r, &mut gi.data_mut()[i * per_in..][..per_in]);
            }
        }
    }
    Ok(grad_input)
}
