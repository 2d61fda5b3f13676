//! Checkpoint container:
//!
//! ```text
//! b"TS2IMGCK" | u32 version | u32 header length | JSON header | f32 blobs
//! ```
//!
//! All integers and floats are little-endian. The blobs are every parameter
//! tensor in registration order, then the Adam first and second moments.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_network, EpochStats, ModelConfig, TrainedModel};
use crate::error::{Error, Result};
use crate::tensor::AdamState;

const MAGIC: &[u8; 8] = b"TS2IMGCK";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    input_shape: [usize; 3],
    parameter_shapes: Vec<Vec<usize>>,
    adam_step_count: u64,
    history: Vec<EpochStats>,
}

fn push_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn save_checkpoint(path: &Path, model: &TrainedModel) -> Result<()> {
    let header = Header {
        config: model.config.clone(),
        input_shape: model.input_shape,
        parameter_shapes: model.network.params().iter().map(|p| p.shape().to_vec()).collect(),
        adam_step_count: model.adam.step_count,
        history: model.history.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(16 + json.len() + 12 * model.adam.m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in model.network.params() {
        push_f32s(&mut out, p.data());
    }
    push_f32s(&mut out, &model.adam.m);
    push_f32s(&mut out, &model.adam.v);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("file is truncated".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Checkpoint("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

pub fn load_checkpoint(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, at: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint(format!("{} is not a checkpoint", path.display())));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let len = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(len)?)?;
    let mut network = build_network::<f32>(&header.config, header.input_shape)?;
    let shapes: Vec<Vec<usize>> = network.params().iter().map(|p| p.shape().to_vec()).collect();
    if shapes != header.parameter_shapes {
        return Err(Error::Checkpoint(
            "parameter shapes do not match the architecture in the header".into(),
        ));
    }
    for p in network.params_mut() {
        let n = p.len();
        p.data_mut().copy_from_slice(&r.f32s(n)?);
    }
    let count = network.parameter_count();
    let m = r.f32s(count)?;
    let v = r.f32s(count)?;
    if r.at != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    let adam = AdamState::from_parts(header.config.adam(), header.adam_step_count, m, v)?;
    Ok(TrainedModel {
        config: header.config,
        input_shape: header.input_shape,
        network,
        adam,
        history: header.history,
    })
}
