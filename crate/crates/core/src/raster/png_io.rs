use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::Rgb8Image;
use crate::error::{Error, Result};

/// Encodes 8-bit RGB (no alpha) PNG bytes.
pub fn encode_png(img: &Rgb8Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        w.write_image_data(&img.data)
            .map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes a PNG to 8-bit RGB. Grayscale and alpha inputs are converted.
pub fn decode_png(bytes: &[u8]) -> Result<Rgb8Image> {
    let mut dec = png::Decoder::new(bytes);
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    read_frame(dec)
}

fn read_frame<R: std::io::Read>(dec: png::Decoder<R>) -> Result<Rgb8Image> {
    let mut reader = dec.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let src = &buf[..info.buffer_size()];
    let data = match info.color_type {
        png::ColorType::Rgb => src.to_vec(),
        png::ColorType::Rgba => src.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => src.iter().flat_map(|&g| [g, g, g]).collect(),
        png::ColorType::GrayscaleAlpha => src.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
        other => return Err(Error::Png(format!("unsupported colour type {other:?}"))),
    };
    Ok(Rgb8Image {
        width: w,
        height: h,
        data,
    })
}

pub fn write_png(path: &Path, img: &Rgb8Image) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let bytes = encode_png(img)?;
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

pub fn read_png(path: &Path) -> Result<Rgb8Image> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = png::Decoder::new(BufReader::new(f));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    read_frame(dec)
}
