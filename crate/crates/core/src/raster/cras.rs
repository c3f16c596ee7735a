//! "CRAS v1" raster container: a JSON header next to a raw little-endian
//! `f32` blob (`<name>.cras` + `<name>.cras.bin`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BinaryMask, Raster};
use crate::{Error, Result};

pub const CRAS_MAGIC: &str = "CRAS1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrasHeader {
    pub magic: String,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub gsd_m: f64,
    pub dtype: String,
    pub region_tag: String,
}

fn blob_path(header_path: &Path) -> PathBuf {
    let mut name = header_path.as_os_str().to_owned();
    name.push(".bin");
    PathBuf::from(name)
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Write `raster` as `path` (header) and `path.bin` (blob).
pub fn write_cras(path: impl AsRef<Path>, raster: &Raster) -> Result<()> {
    let path = path.as_ref();
    let header = CrasHeader {
        magic: CRAS_MAGIC.to_string(),
        height: raster.height,
        width: raster.width,
        channels: raster.channels,
        gsd_m: raster.gsd,
        dtype: "f32".to_string(),
        region_tag: raster.region_tag.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&header).map_err(|e| Error::json(path, e))?;
    json.push(b'\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))?;

    let blob: Vec<u8> = raster.data.iter().flat_map(|v| v.to_le_bytes()).collect();
    let bin = blob_path(path);
    fs::write(&bin, blob).map_err(|e| Error::io(&bin, e))
}

pub fn read_cras(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header: CrasHeader = serde_json::from_slice(&text).map_err(|e| Error::json(path, e))?;
    if header.magic != CRAS_MAGIC {
        return Err(format_err(path, format!("bad magic {:?}", header.magic)));
    }
    if header.dtype != "f32" {
        return Err(format_err(path, format!("unsupported dtype {:?}", header.dtype)));
    }

    let bin = blob_path(path);
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let expected = (header.height * header.width * header.channels * 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::Length {
            path: bin,
            expected,
            actual: bytes.len() as u64,
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Raster::new(
        header.height,
        header.width,
        header.channels,
        header.gsd_m,
        data,
        header.region_tag,
    )
    .map_err(|e| format_err(path, e.to_string()))
}

/// Masks are single-channel CRAS files restricted to `{0.0, 1.0}`.
pub fn write_mask_cras(path: impl AsRef<Path>, mask: &BinaryMask, region_tag: &str) -> Result<()> {
    let data = mask.values().iter().map(|&v| v as f32).collect();
    let raster = Raster::new(mask.height, mask.width, 1, mask.gsd, data, region_tag)?;
    write_cras(path, &raster)
}

pub fn read_mask_cras(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let raster = read_cras(path)?;
    if raster.channels != 1 {
        return Err(format_err(path, format!("mask has {} channels", raster.channels)));
    }
    let values = raster
        .data
        .iter()
        .map(|&v| {
            if v == 0.0 {
                Ok(0u8)
            } else if v == 1.0 {
                Ok(1u8)
            } else {
                Err(format_err(path, format!("mask value {v} is not 0.0 or 1.0")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    BinaryMask::new(raster.height, raster.width, raster.gsd, values)
}
