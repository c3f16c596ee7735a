//! Raster data model and the deterministic geometry/label operations.
//!
//! Pixel data is stored row-major with channels interleaved, i.e. the value
//! of channel `c` at `(row, col)` lives at `(row * width + col) * channels + c`.
//! Model inputs ([`Patch::input`]) use the planar `channels x 50 x 50` layout
//! instead, since that is what the convolution kernels consume.

mod cras;
mod normalize;

pub use cras::{read_cras, read_mask_cras, write_cras, write_mask_cras, CrasHeader, CRAS_MAGIC};
pub use normalize::{normalize_channels, ChannelStats};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, N_CHANNELS, PATCH_AREA, PATCH_SIZE};

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Ground sampling distance in meters per pixel.
    pub gsd: f64,
    pub data: Vec<f32>,
    pub region_tag: String,
}

impl Raster {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        gsd: f64,
        data: Vec<f32>,
        region_tag: impl Into<String>,
    ) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::shape(
                format!("{height}x{width}x{channels} = {} values", height * width * channels),
                format!("{} values", data.len()),
            ));
        }
        if !(gsd > 0.0 && gsd.is_finite()) {
            return Err(Error::InvalidValue(format!("gsd must be positive, got {gsd}")));
        }
        Ok(Raster {
            height,
            width,
            channels,
            gsd,
            data,
            region_tag: region_tag.into(),
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize, gsd: f64) -> Result<Self> {
        Raster::new(height, width, channels, gsd, vec![0.0; height * width * channels], "")
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f32) {
        self.data[(row * self.width + col) * self.channels + channel] = value;
    }

    /// Stack single- or multi-channel rasters on the same grid into one.
    pub fn stack(layers: &[&Raster]) -> Result<Raster> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Empty("no rasters to stack".into()))?;
        for r in layers {
            if r.height != first.height || r.width != first.width {
                return Err(Error::Geometry(format!(
                    "cannot stack {}x{} with {}x{}",
                    first.height, first.width, r.height, r.width
                )));
            }
            if (r.gsd - first.gsd).abs() > 1e-9 * first.gsd {
                return Err(Error::Geometry(format!(
                    "cannot stack rasters with gsd {} and {}",
                    first.gsd, r.gsd
                )));
            }
        }
        let channels: usize = layers.iter().map(|r| r.channels).sum();
        let mut data = Vec::with_capacity(first.height * first.width * channels);
        for px in 0..first.height * first.width {
            for r in layers {
                data.extend_from_slice(&r.data[px * r.channels..(px + 1) * r.channels]);
            }
        }
        Raster::new(
            first.height,
            first.width,
            channels,
            first.gsd,
            data,
            first.region_tag.clone(),
        )
    }

    /// Copy a window out in planar `channels x h x w` order.
    pub fn window_planar(&self, window: Window) -> Result<Vec<f32>> {
        window.check_within(self.height, self.width)?;
        let mut out = vec![0.0f32; self.channels * window.height * window.width];
        let plane = window.height * window.width;
        for r in 0..window.height {
            for c in 0..window.width {
                let src = ((window.row + r) * self.width + window.col + c) * self.channels;
                for ch in 0..self.channels {
                    out[ch * plane + r * window.width + c] = self.data[src + ch];
                }
            }
        }
        Ok(out)
    }
}

/// Per-pixel building / non-building grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub height: usize,
    pub width: usize,
    pub gsd: f64,
    values: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, gsd: f64, values: Vec<u8>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::shape(
                format!("{height}x{width} mask"),
                format!("{} values", values.len()),
            ));
        }
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidValue(format!("mask value {v} is not 0 or 1")));
        }
        if !(gsd > 0.0 && gsd.is_finite()) {
            return Err(Error::InvalidValue(format!("gsd must be positive, got {gsd}")));
        }
        Ok(BinaryMask {
            height,
            width,
            gsd,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize, gsd: f64) -> Self {
        BinaryMask {
            height,
            width,
            gsd,
            values: vec![0; height * width],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.values[row * self.width + col] = on as u8;
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn full_window(&self) -> Window {
        Window::new(0, 0, self.height, self.width)
    }

    pub fn count_ones(&self) -> u64 {
        self.values.iter().map(|&v| v as u64).sum()
    }
}

/// Axis-aligned pixel rectangle `[row, row + height) x [col, col + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Window {
    pub const fn new(row: usize, col: usize, height: usize, width: usize) -> Self {
        Window {
            row,
            col,
            height,
            width,
        }
    }

    pub fn check_within(&self, height: usize, width: usize) -> Result<()> {
        if self.row + self.height > height || self.col + self.width > width {
            return Err(Error::Geometry(format!(
                "window rows {}..{} cols {}..{} exceeds {}x{} grid",
                self.row,
                self.row + self.height,
                self.col,
                self.col + self.width,
                height,
                width
            )));
        }
        Ok(())
    }

    pub fn intersects(&self, other: &Window) -> bool {
        self.row < other.row + other.height
            && other.row < self.row + self.height
            && self.col < other.col + other.width
            && other.col < self.col + self.width
    }
}

/// One model input with its building-pixel-count label.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    /// Planar `5 x 50 x 50` values in canonical channel order.
    pub input: Vec<f32>,
    pub label: u32,
    pub tile_id: String,
    /// `(row, col)` of the top-left pixel within the parent tile.
    pub offset: (usize, usize),
    pub region_tag: String,
}

impl Patch {
    pub fn new(
        input: Vec<f32>,
        label: u32,
        tile_id: impl Into<String>,
        offset: (usize, usize),
        region_tag: impl Into<String>,
    ) -> Result<Self> {
        if input.len() != N_CHANNELS * PATCH_AREA {
            return Err(Error::shape(
                format!("{N_CHANNELS}x{PATCH_SIZE}x{PATCH_SIZE} input"),
                format!("{} values", input.len()),
            ));
        }
        if label as usize > PATCH_AREA {
            return Err(Error::InvalidValue(format!("patch label {label} exceeds {PATCH_AREA}")));
        }
        Ok(Patch {
            input,
            label,
            tile_id: tile_id.into(),
            offset,
            region_tag: region_tag.into(),
        })
    }
}

/// A multi-channel scene and its ground-truth mask on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub id: String,
    pub raster: Raster,
    pub mask: BinaryMask,
}

impl Tile {
    pub fn new(id: impl Into<String>, raster: Raster, mask: BinaryMask) -> Result<Self> {
        if raster.height != mask.height || raster.width != mask.width {
            return Err(Error::Geometry(format!(
                "raster {}x{} and mask {}x{} differ",
                raster.height, raster.width, mask.height, mask.width
            )));
        }
        if raster.channels != N_CHANNELS {
            return Err(Error::shape(
                format!("{N_CHANNELS}-channel tile raster"),
                format!("{} channels", raster.channels),
            ));
        }
        Ok(Tile {
            id: id.into(),
            raster,
            mask,
        })
    }

    pub fn region_tag(&self) -> &str {
        &self.raster.region_tag
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CropWarning {
    TooSmall { height: usize, width: usize },
}

impl std::fmt::Display for CropWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CropWarning::TooSmall { height, width } => write!(
                f,
                "tile {height}x{width} is smaller than one {PATCH_SIZE}x{PATCH_SIZE} patch"
            ),
        }
    }
}

/// Non-overlapping patch windows in row-major order starting at `(0, 0)`.
/// Windows that would cross the right or bottom edge are dropped.
pub fn patch_windows(height: usize, width: usize) -> Vec<Window> {
    let rows = height / PATCH_SIZE;
    let cols = width / PATCH_SIZE;
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| Window::new(r * PATCH_SIZE, c * PATCH_SIZE, PATCH_SIZE, PATCH_SIZE)))
        .collect()
}

/// Crop a tile into labelled 50x50 patches.
///
/// Returns an empty list and a warning when the tile cannot hold a single
/// patch.
pub fn crop_into_patches(tile: &Tile) -> Result<(Vec<Patch>, Option<CropWarning>)> {
    let (h, w) = (tile.raster.height, tile.raster.width);
    if h < PATCH_SIZE || w < PATCH_SIZE {
        let warning = CropWarning::TooSmall { height: h, width: w };
        log::warn!("{}: {warning}", tile.id);
        return Ok((Vec::new(), Some(warning)));
    }
    let patches = patch_windows(h, w)
        .into_iter()
        .map(|win| {
            let label = count_building_pixels(&tile.mask, win)?;
            Patch::new(
                tile.raster.window_planar(win)?,
                label as u32,
                tile.id.clone(),
                (win.row, win.col),
                tile.region_tag(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((patches, None))
}

/// Number of building pixels inside `window`.
pub fn count_building_pixels(mask: &BinaryMask, window: Window) -> Result<u64> {
    window.check_within(mask.height, mask.width)?;
    let mut count = 0u64;
    for r in window.row..window.row + window.height {
        let start = r * mask.width + window.col;
        count += mask.values[start..start + window.width]
            .iter()
            .map(|&v| v as u64)
            .sum::<u64>();
    }
    Ok(count)
}

/// Integer ratio `coarse / fine`, if there is one.
fn integer_ratio(coarse: f64, fine: f64) -> Option<usize> {
    let ratio = coarse / fine;
    let rounded = ratio.round();
    if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-9 * rounded {
        Some(rounded as usize)
    } else {
        None
    }
}

/// Derive a building mask at `target_gsd` from a fine-resolution confidence
/// raster.
///
/// Each output pixel is the mean of its source block, thresholded strictly
/// above zero. Only channel 0 (building confidence) is read; any further
/// channels are ignored.
pub fn downsample_and_binarize(confidence: &Raster, target_gsd: f64) -> Result<BinaryMask> {
    let ratio = integer_ratio(target_gsd, confidence.gsd).ok_or_else(|| {
        Error::Geometry(format!(
            "target gsd {target_gsd} m is not an integer multiple of {} m",
            confidence.gsd
        ))
    })?;
    if !confidence.height.is_multiple_of(ratio) || !confidence.width.is_multiple_of(ratio) {
        return Err(Error::Geometry(format!(
            "{}x{} raster is not divisible into {ratio}x{ratio} blocks",
            confidence.height, confidence.width
        )));
    }
    if confidence.channels == 0 {
        return Err(Error::shape("at least one channel", "0 channels"));
    }
    let stride = confidence.channels;
    if let Some(v) = confidence
        .data
        .iter()
        .step_by(stride)
        .find(|v| !v.is_finite() || **v < 0.0)
    {
        return Err(Error::InvalidValue(format!(
            "confidence values must be finite and nonnegative, found {v}"
        )));
    }

    let (out_h, out_w) = (confidence.height / ratio, confidence.width / ratio);
    let block_area = (ratio * ratio) as f64;
    let mut values = vec![0u8; out_h * out_w];
    for (i, value) in values.iter_mut().enumerate() {
        let (br, bc) = (i / out_w, i % out_w);
        let mut sum = 0.0f64;
        for r in br * ratio..(br + 1) * ratio {
            for c in bc * ratio..(bc + 1) * ratio {
                sum += confidence.get(r, c, 0) as f64;
            }
        }
        *value = (sum / block_area > 0.0) as u8;
    }
    BinaryMask::new(out_h, out_w, target_gsd, values)
}
