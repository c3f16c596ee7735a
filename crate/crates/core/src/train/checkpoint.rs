//! Single-file checkpoint:
//!
//! ```text
//! b"COVCKPT\0" | u64 LE header length | JSON header | f32 LE parameter blob
//! ```
//!
//! The header carries the model config, quantile levels, normalization
//! statistics, input channel selection and a name/shape/offset table into the
//! blob.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nnet::{param_layout, ModelConfig, ModelState, Network, Param};
use crate::raster::ChannelStats;
use crate::{Error, Result, CHANNEL_NAMES};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"COVCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, in f32 elements.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub model: ModelConfig,
    pub quantiles: Vec<f64>,
    pub stats: ChannelStats,
    pub input_channels: Vec<usize>,
    pub input_channel_names: Vec<String>,
    pub rng_seed: u64,
    pub params: Vec<ParamEntry>,
    pub blob_bytes: u64,
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn checkpoint_bytes(state: &ModelState) -> Result<Vec<u8>> {
    let mut offset = 0;
    let params = state
        .network
        .params()
        .iter()
        .map(|p| {
            let e = ParamEntry {
                name: p.name.clone(),
                shape: p.shape.clone(),
                offset,
            };
            offset += p.data.len();
            e
        })
        .collect();
    let header = CheckpointHeader {
        format_version: CHECKPOINT_VERSION,
        model: state.config().clone(),
        quantiles: state.quantiles().levels().to_vec(),
        stats: state.stats.clone(),
        input_channels: state.input_channels.clone(),
        input_channel_names: state
            .input_channels
            .iter()
            .map(|&c| CHANNEL_NAMES[c].to_string())
            .collect(),
        rng_seed: state.rng_seed,
        params,
        blob_bytes: (offset * 4) as u64,
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::json("<checkpoint header>", e))?;
    let mut out = Vec::with_capacity(16 + json.len() + offset * 4);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in state.network.params() {
        for v in &p.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_checkpoint(state: &ModelState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = checkpoint_bytes(state)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parse checkpoint bytes; `path` is only used in error messages.
pub fn checkpoint_from_bytes(bytes: &[u8], path: &Path) -> Result<ModelState> {
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(format_err(path, "not a checkpoint file (bad magic)"));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let header_end = 16usize.saturating_add(header_len);
    if bytes.len() < header_end {
        return Err(Error::Length {
            path: path.to_path_buf(),
            expected: header_end as u64,
            actual: bytes.len() as u64,
        });
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[16..header_end]).map_err(|e| Error::json(path, e))?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(format_err(
            path,
            format!(
                "checkpoint format version {} is not supported (expected {CHECKPOINT_VERSION})",
                header.format_version
            ),
        ));
    }
    let blob = &bytes[header_end..];
    let expected = header_end as u64 + header.blob_bytes;
    if blob.len() as u64 != header.blob_bytes {
        return Err(Error::Length {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    if header.quantiles != header.model.quantiles.levels() {
        return Err(format_err(path, "quantile list disagrees with the model config"));
    }

    let layout = param_layout(&header.model);
    if layout.len() != header.params.len() {
        return Err(format_err(path, "parameter table does not match the model config"));
    }
    let values: Vec<f32> = blob
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let mut params = Vec::with_capacity(layout.len());
    for ((name, shape), entry) in layout.into_iter().zip(&header.params) {
        let n: usize = shape.iter().product();
        if entry.name != name || entry.shape != shape || entry.offset + n > values.len() {
            return Err(format_err(
                path,
                format!(
                    "parameter {:?} {:?} does not match expected {name:?} {shape:?}",
                    entry.name, entry.shape
                ),
            ));
        }
        params.push(Param {
            name,
            shape,
            data: values[entry.offset..entry.offset + n].to_vec(),
        });
    }
    let network = Network::from_params(header.model, params)?;
    ModelState::new(network, header.stats, header.input_channels, header.rng_seed)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelState> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes, path)
}
