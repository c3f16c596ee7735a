//! Building-coverage estimation from low-resolution multi-channel rasters.
//!
//! The pipeline has four stages:
//!
//! * [`raster`]: portable rasters, label derivation (downsample, binarize,
//!   count) and tile-to-patch cropping.
//! * [`synthdata`]: seeded synthetic scenes with exact building masks.
//! * [`nnet`] and [`qloss`]: a small residual convolutional regressor with a
//!   K-node quantile head, trained on the mean pinball loss over nodes.
//! * [`train`] and [`eval`]: experiment-setting-aware splits, the training
//!   loop, checkpoints, patch metrics and tile-level coverage.

pub mod error;
pub mod eval;
pub mod nnet;
pub mod qloss;
pub mod raster;
pub mod rng;
pub mod synthdata;
pub mod train;

pub use error::{Error, Result};

/// Side length, in pixels, of the square model input.
pub const PATCH_SIZE: usize = 50;

/// Pixels in one patch; the upper bound of any patch label.
pub const PATCH_AREA: usize = PATCH_SIZE * PATCH_SIZE;

/// Canonical input channel order.
pub const CHANNEL_NAMES: [&str; 5] = ["s1_vv_mean", "s2_red", "s2_green", "s2_blue", "s2_nir"];

/// Number of canonical input channels.
pub const N_CHANNELS: usize = CHANNEL_NAMES.len();

/// Hex-encoded SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
