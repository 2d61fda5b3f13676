use super::TrainedModel;
use crate::error::{Error, Result};
use crate::preprocess::Image;
use crate::raster::Rgb8Image;

/// Raw post-ReLU activations of conv block `block` (1-based) of head `head`,
/// one single-channel image per filter, taken before that block's pooling.
pub fn feature_activations(model: &TrainedModel, image: &Image, head: usize, block: usize) -> Result<Vec<Image>> {
    let blocks = model.config.filters.len();
    if block == 0 || block > blocks {
        return Err(Error::InvalidArgument(format!(
            "block {block} out of range 1..={blocks}"
        )));
    }
    if head >= model.config.n_heads {
        return Err(Error::InvalidArgument(format!(
            "head {head} out of range for {} heads",
            model.config.n_heads
        )));
    }
    if image.shape() != model.input_shape {
        return Err(Error::shape(
            "feature maps",
            format!("image {:?} does not match model input {:?}", image.shape(), model.input_shape),
        ));
    }
    let _flush = crate::tensor::FlushDenormals::new();
    let out = model
        .network
        .head(head)
        .forward_prefix(image.to_tensor(), 3 * (block - 1) + 2)?;
    let &[_, h, w, c] = out.shape() else {
        return Err(Error::shape("feature maps", format!("unexpected activation shape {:?}", out.shape())));
    };
    let maps = (0..c)
        .map(|k| {
            let data = out.data().iter().skip(k).step_by(c).copied().collect();
            Image::new(h, w, 1, data).expect("slice matches spatial size")
        })
        .collect();
    Ok(maps)
}

/// Per-map min-max normalized activations in `[0, 1]`; constant maps are all
/// zero.
pub fn extract_feature_maps(model: &TrainedModel, image: &Image, head: usize, block: usize) -> Result<Vec<Image>> {
    let mut maps = feature_activations(model, image, head, block)?;
    for m in &mut maps {
        let (lo, hi) = m
            .data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        for v in &mut m.data {
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
    }
    Ok(maps)
}

/// Tiles single-channel `[0, 1]` maps into a grey grid, `cols` per row, with
/// a one-pixel white gutter.
pub fn feature_grid(maps: &[Image], cols: usize) -> Result<Rgb8Image> {
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidArgument("no feature maps to tile".into()))?;
    let (h, w) = (first.height, first.width);
    if maps.iter().any(|m| m.height != h || m.width != w || m.channels != 1) {
        return Err(Error::shape("feature grid", "maps differ in size or are not single-channel"));
    }
    let cols = cols.clamp(1, maps.len());
    let rows = maps.len().div_ceil(cols);
    let (gw, gh) = (cols * (w + 1) - 1, rows * (h + 1) - 1);
    let mut data = vec![255u8; gw * gh * 3];
    for (i, m) in maps.iter().enumerate() {
        let (ox, oy) = ((i % cols) * (w + 1), (i / cols) * (h + 1));
        for y in 0..h {
            for x in 0..w {
                let v = (m.data[y * w + x].clamp(0.0, 1.0) * 255.0).round() as u8;
                let at = ((oy + y) * gw + ox + x) * 3;
                data[at..at + 3].fill(v);
            }
        }
    }
    Ok(Rgb8Image {
        width: gw,
        height: gh,
        data,
    })
}
