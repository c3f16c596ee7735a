#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coverest::nnet::{ModelConfig, ModelState, Network};
use coverest::raster::{ChannelStats, Tile};
use coverest::synthdata::{plan_sites, render_scene, write_dataset, SceneConfig};
use coverest::train::save_checkpoint;

pub fn coverest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coverest"))
        .args(args)
        .env("COVEREST_LOG", "warn")
        .output()
        .expect("binary runs")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn small_scene(seed: u64, n_tiles: usize) -> SceneConfig {
    SceneConfig {
        seed,
        n_tiles,
        ..SceneConfig::default()
    }
}

/// Synthetic tiles whose first channel is replaced by the building mask, so
/// a hand-built network can read the label straight off the input.
pub fn write_oracle_dataset(root: &Path, config: &SceneConfig) -> Vec<Tile> {
    let tiles: Vec<Tile> = plan_sites(config)
        .unwrap()
        .iter()
        .map(|site| {
            let mut tile = render_scene(config, site).unwrap();
            for r in 0..tile.mask.height {
                for c in 0..tile.mask.width {
                    let v = tile.mask.get(r, c) as f32;
                    tile.raster.set(r, c, 0, v);
                }
            }
            tile
        })
        .collect();
    write_dataset(root, &tiles, Some(config.seed), Some(config.clone())).unwrap();
    tiles
}

/// Network that outputs the number of ones in input channel 0 on every node:
/// centre-tap stem, zeroed residual branches, average pooling, and a head
/// scaled by the patch area.
pub fn oracle_state() -> ModelState {
    let cfg = ModelConfig {
        output_scale: 2500.0,
        ..ModelConfig::default()
    };
    let k = cfg.stem_kernel;
    let mut net = Network::<f32>::init(cfg, 0).unwrap();
    for p in net.params_mut() {
        let name = p.name.clone();
        if name.ends_with(".weight") {
            p.data.iter_mut().for_each(|v| *v = 0.0);
        }
        match name.as_str() {
            "stem.conv.weight" => p.data[k * k / 2] = 1.0,
            "head.fc1.weight" => p.data[0] = 1.0,
            "head.fc2.weight" => {
                let hidden = p.shape[1];
                for node in 0..p.shape[0] {
                    p.data[node * hidden] = 1.0;
                }
            }
            "head.fc2.bias" => p.data.iter_mut().for_each(|v| *v = 0.0),
            _ => {}
        }
    }
    ModelState::new(net, ChannelStats::identity(5), (0..5).collect(), 0).unwrap()
}

pub fn write_oracle_checkpoint(path: &Path) -> PathBuf {
    save_checkpoint(&oracle_state(), path).unwrap();
    path.to_path_buf()
}
