//! On-disk dataset layout:
//!
//! ```text
//! <root>/manifest.json
//! <root>/tiles/<id>.cras  (+ .cras.bin)   5-channel scene
//! <root>/masks/<id>.cras  (+ .cras.bin)   1-channel {0,1} building mask
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{plan_sites, render_scene, SceneConfig, Site};
use crate::raster::{
    count_building_pixels, crop_into_patches, patch_windows, read_cras, read_mask_cras, write_cras, write_mask_cras,
    Patch, Tile,
};
use crate::{Error, Result, PATCH_SIZE};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchEntry {
    pub row: usize,
    pub col: usize,
    pub label: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileEntry {
    pub id: String,
    pub region_tag: String,
    /// Paths relative to the dataset root.
    pub tile: String,
    pub mask: String,
    pub height: usize,
    pub width: usize,
    /// Cell of the generator's location grid, when synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<(usize, usize)>,
    pub patches: Vec<PatchEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub patch_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SceneConfig>,
    pub tiles: Vec<TileEntry>,
}

impl Manifest {
    pub fn n_patches(&self) -> usize {
        self.tiles.iter().map(|t| t.patches.len()).sum()
    }

    /// Sorted, de-duplicated region tags.
    pub fn region_tags(&self) -> Vec<String> {
        let mut tags: Vec<String> = self.tiles.iter().map(|t| t.region_tag.clone()).collect();
        tags.sort();
        tags.dedup();
        tags
    }

    pub fn labels(&self) -> Vec<u32> {
        self.tiles
            .iter()
            .flat_map(|t| t.patches.iter().map(|p| p.label))
            .collect()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_slice(&text).map_err(|e| Error::json(path, e))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                    m.format_version
                ),
            });
        }
        if m.patch_size != PATCH_SIZE {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("patch size {} is not {PATCH_SIZE}", m.patch_size),
            });
        }
        Ok(m)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut json = serde_json::to_vec_pretty(self).map_err(|e| Error::json(path, e))?;
        json.push(b'\n');
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn entry_for(tile: &Tile, site: Option<&Site>) -> Result<TileEntry> {
    let patches = patch_windows(tile.mask.height, tile.mask.width)
        .into_iter()
        .map(|w| {
            Ok(PatchEntry {
                row: w.row,
                col: w.col,
                label: count_building_pixels(&tile.mask, w)? as u32,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TileEntry {
        id: tile.id.clone(),
        region_tag: tile.region_tag().to_string(),
        tile: format!("tiles/{}.cras", tile.id),
        mask: format!("masks/{}.cras", tile.id),
        height: tile.raster.height,
        width: tile.raster.width,
        location: site.map(|s| s.location),
        patches,
    })
}

/// Write `tiles` under `root` with a manifest; returns the manifest.
pub fn write_dataset(root: &Path, tiles: &[Tile], seed: Option<u64>, config: Option<SceneConfig>) -> Result<Manifest> {
    create_dir(&root.join("tiles"))?;
    create_dir(&root.join("masks"))?;
    let mut entries = Vec::with_capacity(tiles.len());
    for tile in tiles {
        let entry = entry_for(tile, None)?;
        write_cras(root.join(&entry.tile), &tile.raster)?;
        write_mask_cras(root.join(&entry.mask), &tile.mask, tile.region_tag())?;
        entries.push(entry);
    }
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        patch_size: PATCH_SIZE,
        seed,
        config,
        tiles: entries,
    };
    manifest.write(root.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(feature = "parallel")]
fn render_all(config: &SceneConfig, sites: &[Site]) -> Result<Vec<Tile>> {
    use rayon::prelude::*;
    sites.par_iter().map(|s| render_scene(config, s)).collect()
}

#[cfg(not(feature = "parallel"))]
fn render_all(config: &SceneConfig, sites: &[Site]) -> Result<Vec<Tile>> {
    sites.iter().map(|s| render_scene(config, s)).collect()
}

/// Render every tile of `config` and write the dataset under `out_dir`.
/// Output depends only on the config, never on thread scheduling.
pub fn generate_dataset(config: &SceneConfig, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let root = out_dir.as_ref();
    let sites = plan_sites(config)?;
    create_dir(&root.join("tiles"))?;
    create_dir(&root.join("masks"))?;
    let mut entries = Vec::with_capacity(sites.len());
    // Bounded batches keep memory flat for large corpora.
    for chunk in sites.chunks(32) {
        for (tile, site) in render_all(config, chunk)?.iter().zip(chunk) {
            let entry = entry_for(tile, Some(site))?;
            write_cras(root.join(&entry.tile), &tile.raster)?;
            write_mask_cras(root.join(&entry.mask), &tile.mask, tile.region_tag())?;
            entries.push(entry);
        }
    }
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        patch_size: PATCH_SIZE,
        seed: Some(config.seed),
        config: Some(config.clone()),
        tiles: entries,
    };
    manifest.write(root.join("manifest.json"))?;
    log::info!(
        "wrote {} tiles / {} patches to {}",
        manifest.tiles.len(),
        manifest.n_patches(),
        root.display()
    );
    Ok(manifest)
}

/// A dataset directory with its parsed manifest.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
}

pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref().to_path_buf();
    let manifest = Manifest::read(root.join("manifest.json"))?;
    Ok(Dataset { root, manifest })
}

impl Dataset {
    /// Read one tile and check it against its manifest entry.
    pub fn load_tile(&self, entry: &TileEntry) -> Result<Tile> {
        let raster = read_cras(self.root.join(&entry.tile))?;
        let mask = read_mask_cras(self.root.join(&entry.mask))?;
        let path = self.root.join(&entry.tile);
        if raster.height != entry.height || raster.width != entry.width || raster.region_tag != entry.region_tag {
            return Err(Error::Format {
                path,
                message: format!(
                    "raster {}x{} tagged {:?} does not match the manifest ({}x{}, {:?})",
                    raster.height, raster.width, raster.region_tag, entry.height, entry.width, entry.region_tag
                ),
            });
        }
        Tile::new(entry.id.clone(), raster, mask)
    }

    /// Patches of one tile, with labels cross-checked against the manifest.
    pub fn tile_patches(&self, entry: &TileEntry) -> Result<Vec<Patch>> {
        let tile = self.load_tile(entry)?;
        let (patches, warning) = crop_into_patches(&tile)?;
        if let Some(w) = warning {
            log::warn!("tile {}: {w}", entry.id);
        }
        let listed: Vec<(usize, usize, u32)> = entry.patches.iter().map(|p| (p.row, p.col, p.label)).collect();
        let found: Vec<(usize, usize, u32)> = patches.iter().map(|p| (p.offset.0, p.offset.1, p.label)).collect();
        if listed != found {
            return Err(Error::Format {
                path: self.root.join(&entry.mask),
                message: format!("patch labels disagree with the manifest for tile {}", entry.id),
            });
        }
        Ok(patches)
    }

    /// All patches of the tiles selected by `keep`, in manifest order.
    pub fn patches_where(&self, keep: impl Fn(&TileEntry) -> bool) -> Result<Vec<Patch>> {
        let mut out = Vec::new();
        for entry in self.manifest.tiles.iter().filter(|e| keep(e)) {
            out.extend(self.tile_patches(entry)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_tile_lists_sixteen_patches() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SceneConfig {
            n_tiles: 1,
            seed: 5,
            ..SceneConfig::default()
        };
        let m = generate_dataset(&cfg, dir.path()).unwrap();
        assert_eq!(m.tiles.len(), 1);
        assert_eq!(m.n_patches(), 16);
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.manifest, m);
        let patches = ds.patches_where(|_| true).unwrap();
        assert_eq!(patches.len(), 16);
        let mask_total = ds.load_tile(&m.tiles[0]).unwrap().mask.count_ones();
        assert_eq!(patches.iter().map(|p| p.label as u64).sum::<u64>(), mask_total);
    }

    #[test]
    fn zero_tiles_is_an_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SceneConfig {
            n_tiles: 0,
            ..SceneConfig::default()
        };
        let m = generate_dataset(&cfg, dir.path()).unwrap();
        assert!(m.tiles.is_empty());
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn regeneration_is_bitwise_identical() {
        let cfg = SceneConfig {
            n_tiles: 3,
            seed: 11,
            ..SceneConfig::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_dataset(&cfg, a.path()).unwrap();
        generate_dataset(&cfg, b.path()).unwrap();
        for rel in ["manifest.json", "tiles/t00002.cras.bin", "masks/t00001.cras.bin"] {
            let x = fs::read(a.path().join(rel)).unwrap();
            let y = fs::read(b.path().join(rel)).unwrap();
            assert_eq!(crate::sha256_hex(&x), crate::sha256_hex(&y), "{rel}");
        }
    }

    #[test]
    fn tampered_label_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SceneConfig {
            n_tiles: 1,
            seed: 2,
            ..SceneConfig::default()
        };
        let mut m = generate_dataset(&cfg, dir.path()).unwrap();
        m.tiles[0].patches[3].label += 1;
        m.write(dir.path().join("manifest.json")).unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        assert!(matches!(
            ds.tile_patches(&ds.manifest.tiles[0]),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn unsupported_version() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest {
            format_version: 99,
            patch_size: PATCH_SIZE,
            seed: None,
            config: None,
            tiles: vec![],
        };
        m.write(dir.path().join("manifest.json")).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Format { .. })));
    }
}
