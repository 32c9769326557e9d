//! Model files: a JSON header plus a little-endian `f32` payload.
//!
//! The payload holds the trainable parameters in the order listed by
//! `tensors` in the header, then every block's BN running means, then every
//! block's BN running variances.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{CnnArch, CnnModel, Normalization};
use crate::error::{Error, Result};

pub const CNN_SCHEMA_VERSION: u32 = 1;
pub const HEADER_FILE: &str = "model.json";
pub const WEIGHTS_FILE: &str = "weights.f32";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnHeader {
    pub schema_version: u32,
    pub arch: CnnArch,
    pub shape_chain: Vec<usize>,
    pub norm: Normalization,
    pub seed: u64,
    pub tensors: Vec<(String, usize)>,
    pub n_trainable: usize,
    pub n_running: usize,
    /// free-form training provenance (data hash, config hash)
    pub provenance: String,
}

pub fn encode_weights(model: &CnnModel) -> Vec<u8> {
    let mut out = Vec::new();
    let all = model.params.iter().chain(model.running_mean.iter().flatten()).chain(model.running_var.iter().flatten());
    for &v in all {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn save_model(model: &CnnModel, dir: impl AsRef<Path>, provenance: &str) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = CnnHeader {
        schema_version: CNN_SCHEMA_VERSION,
        arch: model.arch.clone(),
        shape_chain: model.arch.shape_chain(),
        norm: model.norm,
        seed: model.seed,
        tensors: model.param_tensors(),
        n_trainable: model.params.len(),
        n_running: model.running_mean.iter().map(Vec::len).sum(),
        provenance: provenance.to_string(),
    };
    let hp = dir.join(HEADER_FILE);
    std::fs::write(&hp, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&hp, e))?;
    let wp = dir.join(WEIGHTS_FILE);
    std::fs::write(&wp, encode_weights(model)).map_err(|e| Error::io(&wp, e))
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<(CnnModel, CnnHeader)> {
    let dir = dir.as_ref();
    let hp = dir.join(HEADER_FILE);
    let text = std::fs::read_to_string(&hp).map_err(|e| Error::io(&hp, e))?;
    let header: CnnHeader = serde_json::from_str(&text)?;
    if header.schema_version != CNN_SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "CNN schema version {} (expected {CNN_SCHEMA_VERSION})",
            header.schema_version
        )));
    }
    let mut model = CnnModel::new(header.arch.clone(), header.seed)?;
    if model.params.len() != header.n_trainable || model.param_tensors() != header.tensors {
        return Err(Error::Schema("parameter layout does not match the architecture".into()));
    }
    let wp = dir.join(WEIGHTS_FILE);
    let bytes = std::fs::read(&wp).map_err(|e| Error::io(&wp, e))?;
    let n_running: usize = model.running_mean.iter().map(Vec::len).sum();
    let expected = 4 * (model.params.len() + 2 * n_running);
    if bytes.len() != expected {
        return Err(Error::Schema(format!("weight file has {} bytes, expected {expected}", bytes.len())));
    }
    let mut vals = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
    for p in model.params.iter_mut() {
        *p = vals.next().unwrap();
    }
    for p in model.running_mean.iter_mut().flatten() {
        *p = vals.next().unwrap();
    }
    for p in model.running_var.iter_mut().flatten() {
        *p = vals.next().unwrap();
    }
    model.norm = header.norm;
    Ok((model, header))
}
