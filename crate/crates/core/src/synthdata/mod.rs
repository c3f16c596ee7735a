//! Seeded synthetic scenes with exact building masks.
//!
//! Each tile is a 10 m grid of three land-cover classes (bare soil,
//! vegetation, buildings) rendered into the five canonical channels:
//!
//! * Bright roofs share the soil spectrum in RGB and NIR; only the radar
//!   channel tells them apart.
//! * Dark roofs share the vegetation spectrum in RGB; only NIR tells them
//!   apart.
//! * The radar channel is a smoothed mix of built-up density and vegetation
//!   volume, with multiplicative speckle, so on its own it is ambiguous.
//!
//! Buildings are axis-aligned rectangles drawn from a fixed per-tile list of
//! candidates; candidate `i` is built when its uniform draw falls below the
//! local acceptance probability. Raising the density therefore only ever adds
//! buildings, which makes "same place, later date" scenes easy to produce.

mod dataset;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::raster::{BinaryMask, Raster, Tile};
use crate::rng::{derive_seed, label_id, stream};
use crate::{Error, Result, N_CHANNELS, PATCH_SIZE};

pub use dataset::{
    generate_dataset, load_dataset, write_dataset, Dataset, Manifest, PatchEntry, TileEntry, MANIFEST_VERSION,
};

/// Ground sampling distance of every synthetic raster, in metres.
pub const SYNTH_GSD: f64 = 10.0;

/// Per-region appearance and density parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionStyle {
    /// Multiplier on the building acceptance probability.
    pub density_scale: f64,
    /// Probability that a building has a dark roof.
    pub dark_roof_fraction: f64,
    /// Multiplier on bright-roof reflectance.
    pub roof_brightness: f64,
    /// Fraction of open land covered by vegetation.
    pub vegetation_cover: f64,
    /// Radar response to built-up density.
    pub s1_gain: f64,
}

impl Default for RegionStyle {
    fn default() -> Self {
        RegionStyle {
            density_scale: 1.0,
            dark_roof_fraction: 0.4,
            roof_brightness: 1.0,
            vegetation_cover: 0.5,
            s1_gain: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub tag: String,
    /// Relative sampling weight of this region among tiles.
    pub weight: f64,
    #[serde(default)]
    pub style: RegionStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub tile_size: usize,
    /// Peak acceptance probability of a building candidate, in [0, 1].
    pub building_density_target: f64,
    pub seed: u64,
    pub n_tiles: usize,
    pub regions: Vec<RegionSpec>,
    /// Std of the additive Gaussian noise on every channel.
    pub noise_std: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            tile_size: 200,
            building_density_target: 0.6,
            seed: 0,
            n_tiles: 125,
            regions: default_regions(),
            noise_std: 0.02,
        }
    }
}

/// Four pseudo-regions with distinct styles.
pub fn default_regions() -> Vec<RegionSpec> {
    let style = |density_scale, dark_roof_fraction, roof_brightness, vegetation_cover, s1_gain| RegionStyle {
        density_scale,
        dark_roof_fraction,
        roof_brightness,
        vegetation_cover,
        s1_gain,
    };
    vec![
        RegionSpec {
            tag: "R1".into(),
            weight: 1.0,
            style: style(1.0, 0.35, 1.0, 0.5, 1.0),
        },
        RegionSpec {
            tag: "R2".into(),
            weight: 1.0,
            style: style(1.25, 0.55, 0.92, 0.65, 0.9),
        },
        RegionSpec {
            tag: "R3".into(),
            weight: 1.0,
            style: style(0.85, 0.25, 1.08, 0.35, 1.12),
        },
        RegionSpec {
            tag: "R4".into(),
            weight: 1.0,
            style: style(1.1, 0.45, 1.04, 0.55, 1.05),
        },
    ]
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 || !self.tile_size.is_multiple_of(PATCH_SIZE) {
            return Err(Error::Config(format!(
                "tile_size {} is not a positive multiple of {PATCH_SIZE}",
                self.tile_size
            )));
        }
        if !(0.0..=1.0).contains(&self.building_density_target) {
            return Err(Error::Config(format!(
                "building_density_target {} is outside [0, 1]",
                self.building_density_target
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!(
                "noise_std {} must be nonnegative",
                self.noise_std
            )));
        }
        if self.regions.is_empty() {
            return Err(Error::Config("at least one region is required".into()));
        }
        let mut tags: Vec<&str> = self.regions.iter().map(|r| r.tag.as_str()).collect();
        tags.sort_unstable();
        if tags.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("region tags must be unique".into()));
        }
        for r in &self.regions {
            let s = &r.style;
            let ok = r.weight > 0.0
                && r.weight.is_finite()
                && !r.tag.is_empty()
                && s.density_scale >= 0.0
                && (0.0..=1.0).contains(&s.dark_roof_fraction)
                && (0.0..=1.0).contains(&s.vegetation_cover)
                && s.roof_brightness > 0.0
                && s.s1_gain >= 0.0;
            if !ok {
                return Err(Error::Config(format!(
                    "region {:?} has an invalid weight or style",
                    r.tag
                )));
            }
        }
        Ok(())
    }
}

/// Nonnegative weights over a grid of candidate locations.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub height: usize,
    pub width: usize,
    weights: Vec<f64>,
}

impl DensityMap {
    pub fn new(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != height * width {
            return Err(Error::shape(format!("{height}x{width} weights"), weights.len()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidValue(
                "density weights must be finite and nonnegative".into(),
            ));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidValue("density map has no positive weight".into()));
        }
        Ok(DensityMap { height, width, weights })
    }

    pub fn weight(&self, loc: (usize, usize)) -> f64 {
        self.weights[loc.0 * self.width + loc.1]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}

/// Draw `n` grid cells with probability proportional to their weight.
pub fn sample_locations(density: &DensityMap, n: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n == 0 {
        return Err(Error::InvalidValue("sample_locations needs n >= 1".into()));
    }
    let dist = WeightedIndex::new(&density.weights).map_err(|e| Error::InvalidValue(format!("density map: {e}")))?;
    let mut rng = stream(seed, &[]);
    Ok((0..n)
        .map(|_| {
            let i = dist.sample(&mut rng);
            (i / density.width, i % density.width)
        })
        .collect())
}

const WORLD_GRID: usize = 24;
const DOMAIN_WORLD: u64 = 0x5752_4c44;

/// The location-weight grid of one region: log-normal "population" per cell.
pub fn region_density(seed: u64, tag: &str) -> DensityMap {
    let mut rng = stream(seed, &[DOMAIN_WORLD, label_id(tag)]);
    let ln = LogNormal::new(0.0, 1.2).expect("valid log-normal");
    let weights = (0..WORLD_GRID * WORLD_GRID).map(|_| ln.sample(&mut rng)).collect();
    DensityMap::new(WORLD_GRID, WORLD_GRID, weights).expect("log-normal weights are positive")
}

/// Where and how urban one tile is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub index: usize,
    pub region_tag: String,
    /// Cell of the region's density grid the tile was drawn from.
    pub location: (usize, usize),
    /// Location weight relative to the region's densest cell, in (0, 1].
    pub intensity: f64,
}

/// Choose a region and a density-weighted location for every tile.
pub fn plan_sites(config: &SceneConfig) -> Result<Vec<Site>> {
    config.validate()?;
    let maps: Vec<DensityMap> = config
        .regions
        .iter()
        .map(|r| region_density(config.seed, &r.tag))
        .collect();
    let region_dist = WeightedIndex::new(config.regions.iter().map(|r| r.weight))
        .map_err(|e| Error::Config(format!("region weights: {e}")))?;
    (0..config.n_tiles)
        .map(|index| {
            let mut rng = stream(config.seed, &[index as u64, 0]);
            let r = region_dist.sample(&mut rng);
            let location = sample_locations(&maps[r], 1, derive_seed(config.seed, &[index as u64, 1]))?[0];
            Ok(Site {
                index,
                region_tag: config.regions[r].tag.clone(),
                location,
                intensity: maps[r].weight(location) / maps[r].max_weight(),
            })
        })
        .collect()
}

/// Axis-aligned building footprint in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Building {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

/// Union of footprints on a `size x size` grid; parts outside are clipped.
pub fn rasterize_buildings(size: usize, buildings: &[Building]) -> BinaryMask {
    let mut mask = BinaryMask::zeros(size, size, SYNTH_GSD);
    for b in buildings {
        for r in b.row..(b.row + b.height).min(size) {
            for c in b.col..(b.col + b.width).min(size) {
                mask.set(r, c, true);
            }
        }
    }
    mask
}

struct Candidate {
    building: Building,
    center: (f64, f64),
    accept_draw: f64,
    dark: bool,
    tone: f64,
}

/// Smooth random field in [0, 1]: bilinear interpolation of uniform values on
/// a coarse lattice.
fn value_noise<R: Rng>(size: usize, cell: usize, rng: &mut R) -> Vec<f64> {
    let n = size / cell + 2;
    let lattice: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    let mut out = vec![0.0; size * size];
    for r in 0..size {
        let fy = r as f64 / cell as f64;
        let (y0, ty) = (fy.floor() as usize, fy.fract());
        for c in 0..size {
            let fx = c as f64 / cell as f64;
            let (x0, tx) = (fx.floor() as usize, fx.fract());
            let v = |y: usize, x: usize| lattice[y * n + x];
            let top = v(y0, x0) * (1.0 - tx) + v(y0, x0 + 1) * tx;
            let bot = v(y0 + 1, x0) * (1.0 - tx) + v(y0 + 1, x0 + 1) * tx;
            out[r * size + c] = top * (1.0 - ty) + bot * ty;
        }
    }
    out
}

/// Mean over the `(2r+1)^2` window around each pixel, clipped at the border.
fn box_blur(values: &[f64], size: usize, radius: usize) -> Vec<f64> {
    let w = size + 1;
    let mut sat = vec![0.0; w * w];
    for r in 0..size {
        let mut row = 0.0;
        for c in 0..size {
            row += values[r * size + c];
            sat[(r + 1) * w + c + 1] = sat[r * w + c + 1] + row;
        }
    }
    let mut out = vec![0.0; size * size];
    for r in 0..size {
        let (r0, r1) = (r.saturating_sub(radius), (r + radius + 1).min(size));
        for c in 0..size {
            let (c0, c1) = (c.saturating_sub(radius), (c + radius + 1).min(size));
            let s = sat[r1 * w + c1] - sat[r0 * w + c1] - sat[r1 * w + c0] + sat[r0 * w + c0];
            out[r * size + c] = s / ((r1 - r0) * (c1 - c0)) as f64;
        }
    }
    out
}

const SOIL: [f64; 4] = [0.30, 0.26, 0.21, 0.31];
const VEGETATION: [f64; 4] = [0.06, 0.10, 0.05, 0.45];
const DARK_ROOF: [f64; 4] = [0.07, 0.10, 0.06, 0.12];
const S1_BASE: f64 = 0.08;
const S1_VEGETATION: f64 = 0.6;
const S1_BUILT: f64 = 0.9;

/// Building candidates per pixel of tile area.
const CANDIDATES_PER_PIXEL: f64 = 1.0 / 8.0;

/// Ground-truth class of a rendered pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandCover {
    Soil,
    Vegetation,
    BrightRoof,
    DarkRoof,
}

/// Render one tile at `site`.
pub fn render_scene(config: &SceneConfig, site: &Site) -> Result<Tile> {
    Ok(render_scene_with_cover(config, site)?.0)
}

/// [`render_scene`] plus the per-pixel land-cover classes (row-major).
pub fn render_scene_with_cover(config: &SceneConfig, site: &Site) -> Result<(Tile, Vec<LandCover>)> {
    config.validate()?;
    let region = config
        .regions
        .iter()
        .find(|r| r.tag == site.region_tag)
        .ok_or_else(|| Error::Config(format!("site region {:?} is not configured", site.region_tag)))?;
    let style = &region.style;
    let size = config.tile_size;
    let seed = config.seed;
    let idx = site.index as u64;

    // Building density field: a few Gaussian settlement cores.
    let mut layout = stream(seed, &[idx, 2]);
    let n_cores = layout.random_range(1..=3);
    let cores: Vec<(f64, f64, f64)> = (0..n_cores)
        .map(|_| {
            (
                layout.random::<f64>() * size as f64,
                layout.random::<f64>() * size as f64,
                layout.random_range(25.0..80.0),
            )
        })
        .collect();
    let density_at = |r: f64, c: f64| {
        let core = cores
            .iter()
            .map(|&(cr, cc, s)| (-((r - cr).powi(2) + (c - cc).powi(2)) / (2.0 * s * s)).exp())
            .fold(0.0, f64::max);
        0.04 + 0.96 * core
    };
    let peak = (config.building_density_target * style.density_scale * site.intensity).min(1.0);

    // Fixed candidate list, independent of every density parameter.
    let mut cand_rng = stream(seed, &[idx, 3]);
    let side = LogNormal::new(4.0f64.ln(), 0.4).expect("valid log-normal");
    let n_cand = (size as f64 * size as f64 * CANDIDATES_PER_PIXEL).round() as usize;
    let candidates: Vec<Candidate> = (0..n_cand)
        .map(|_| {
            let h = (side.sample(&mut cand_rng).round() as usize).clamp(2, 15);
            let w = (side.sample(&mut cand_rng).round() as usize).clamp(2, 15);
            let row = cand_rng.random_range(0..=size - h);
            let col = cand_rng.random_range(0..=size - w);
            Candidate {
                building: Building {
                    row,
                    col,
                    height: h,
                    width: w,
                },
                center: (row as f64 + h as f64 / 2.0, col as f64 + w as f64 / 2.0),
                accept_draw: cand_rng.random(),
                dark: cand_rng.random::<f64>() < style.dark_roof_fraction,
                tone: cand_rng.random_range(0.9..1.1),
            }
        })
        .collect();

    let mut mask = BinaryMask::zeros(size, size, SYNTH_GSD);
    // roof spectrum per pixel, later candidates drawn on top
    let mut roof: Vec<Option<(bool, [f64; 4])>> = vec![None; size * size];
    for cand in &candidates {
        let p = peak * density_at(cand.center.0, cand.center.1);
        if cand.accept_draw >= p {
            continue;
        }
        let spectrum = if cand.dark {
            DARK_ROOF.map(|v| v * cand.tone)
        } else {
            SOIL.map(|v| v * cand.tone * style.roof_brightness)
        };
        let b = cand.building;
        for r in b.row..b.row + b.height {
            for c in b.col..b.col + b.width {
                mask.set(r, c, true);
                roof[r * size + c] = Some((cand.dark, spectrum));
            }
        }
    }

    // Open land: vegetation where a smooth field falls under the cover fraction.
    let mut land_rng = stream(seed, &[idx, 4]);
    let field = value_noise(size, 25, &mut land_rng);
    let soil_tone = land_rng.random_range(0.9..1.1);
    let veg: Vec<f64> = field
        .iter()
        .zip(mask.values())
        .map(|(&f, &m)| if m == 0 && f < style.vegetation_cover { 1.0 } else { 0.0 })
        .collect();

    let built: Vec<f64> = mask.values().iter().map(|&m| m as f64).collect();
    let built_blur = box_blur(&built, size, 3);
    let veg_blur = box_blur(&veg, size, 3);

    let mut noise_rng = stream(seed, &[idx, 5]);
    let noise = Normal::new(0.0, config.noise_std).expect("valid noise std");
    let speckle = LogNormal::new(0.0, 0.25).expect("valid speckle");

    let plane = size * size;
    let mut data = vec![0.0f32; N_CHANNELS * plane];
    let mut cover = Vec::with_capacity(plane);
    for i in 0..plane {
        let s1 = (S1_BASE + S1_BUILT * style.s1_gain * built_blur[i] + S1_VEGETATION * veg_blur[i])
            * speckle.sample(&mut noise_rng);
        let (class, optical) = match roof[i] {
            Some((true, spec)) => (LandCover::DarkRoof, spec),
            Some((false, spec)) => (LandCover::BrightRoof, spec),
            None if veg[i] > 0.0 => (LandCover::Vegetation, VEGETATION),
            None => (LandCover::Soil, SOIL.map(|v| v * soil_tone)),
        };
        cover.push(class);
        let px = &mut data[i * N_CHANNELS..(i + 1) * N_CHANNELS];
        px[0] = (s1 + noise.sample(&mut noise_rng)) as f32;
        for (ch, v) in optical.iter().enumerate() {
            px[ch + 1] = (v + noise.sample(&mut noise_rng)) as f32;
        }
    }
    let raster = Raster::new(size, size, N_CHANNELS, SYNTH_GSD, data, site.region_tag.clone())?;
    Ok((Tile::new(tile_id(site.index), raster, mask)?, cover))
}

pub fn tile_id(index: usize) -> String {
    format!("t{index:05}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{count_building_pixels, crop_into_patches, Window};

    fn small(n_tiles: usize) -> SceneConfig {
        SceneConfig {
            n_tiles,
            seed: 7,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn single_cell_gets_every_sample() {
        let mut w = vec![0.0; 12];
        w[7] = 2.5;
        let map = DensityMap::new(3, 4, w).unwrap();
        assert!(sample_locations(&map, 50, 1).unwrap().iter().all(|&l| l == (1, 3)));
    }

    #[test]
    fn weights_one_to_three() {
        let map = DensityMap::new(1, 2, vec![1.0, 3.0]).unwrap();
        let locs = sample_locations(&map, 100_000, 42).unwrap();
        let second = locs.iter().filter(|l| l.1 == 1).count() as f64;
        let frac = second / locs.len() as f64;
        assert!((frac - 0.75).abs() < 0.02 * 0.75, "{frac}");
        assert_eq!(locs, sample_locations(&map, 100_000, 42).unwrap());
    }

    #[test]
    fn bad_density_maps() {
        assert!(DensityMap::new(1, 2, vec![0.0, 0.0]).is_err());
        assert!(DensityMap::new(1, 2, vec![-1.0, 2.0]).is_err());
        let map = DensityMap::new(1, 1, vec![1.0]).unwrap();
        assert!(sample_locations(&map, 0, 0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SceneConfig {
            tile_size: 120,
            ..small(1)
        }
        .validate()
        .is_err());
        assert!(SceneConfig {
            building_density_target: 1.5,
            ..small(1)
        }
        .validate()
        .is_err());
        let mut dup = small(1);
        dup.regions[1].tag = "R1".into();
        assert!(dup.validate().is_err());
    }

    #[test]
    fn one_ten_by_ten_building() {
        let b = Building {
            row: 3,
            col: 40,
            height: 10,
            width: 10,
        };
        assert_eq!(rasterize_buildings(50, &[b]).count_ones(), 100);
    }

    /// Union area of rectangles inside a window by coordinate compression.
    fn union_area(rects: &[Building], win: Window) -> u64 {
        let clip: Vec<(usize, usize, usize, usize)> = rects
            .iter()
            .filter_map(|b| {
                let r0 = b.row.max(win.row);
                let r1 = (b.row + b.height).min(win.row + win.height);
                let c0 = b.col.max(win.col);
                let c1 = (b.col + b.width).min(win.col + win.width);
                (r0 < r1 && c0 < c1).then_some((r0, r1, c0, c1))
            })
            .collect();
        let mut ys: Vec<usize> = clip.iter().flat_map(|r| [r.0, r.1]).collect();
        let mut xs: Vec<usize> = clip.iter().flat_map(|r| [r.2, r.3]).collect();
        ys.sort_unstable();
        ys.dedup();
        xs.sort_unstable();
        xs.dedup();
        let mut area = 0;
        for yw in ys.windows(2) {
            for xw in xs.windows(2) {
                if clip
                    .iter()
                    .any(|r| r.0 <= yw[0] && yw[1] <= r.1 && r.2 <= xw[0] && xw[1] <= r.3)
                {
                    area += ((yw[1] - yw[0]) * (xw[1] - xw[0])) as u64;
                }
            }
        }
        area
    }

    #[test]
    fn window_counts_equal_rectangle_union_area() {
        let mut rng = stream(3, &[]);
        for _ in 0..20 {
            let rects: Vec<Building> = (0..rng.random_range(0..40))
                .map(|_| Building {
                    row: rng.random_range(0..95),
                    col: rng.random_range(0..95),
                    height: rng.random_range(1..20),
                    width: rng.random_range(1..20),
                })
                .collect();
            let mask = rasterize_buildings(100, &rects);
            for w in crate::raster::patch_windows(100, 100) {
                assert_eq!(count_building_pixels(&mask, w).unwrap(), union_area(&rects, w));
            }
        }
    }

    #[test]
    fn zero_density_gives_empty_scene() {
        let cfg = SceneConfig {
            building_density_target: 0.0,
            ..small(3)
        };
        for site in plan_sites(&cfg).unwrap() {
            let tile = render_scene(&cfg, &site).unwrap();
            assert_eq!(tile.mask.count_ones(), 0);
            let (patches, _) = crop_into_patches(&tile).unwrap();
            assert!(patches.iter().all(|p| p.label == 0));
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let cfg = small(2);
        let sites = plan_sites(&cfg).unwrap();
        assert_eq!(sites, plan_sites(&cfg).unwrap());
        assert_eq!(
            render_scene(&cfg, &sites[1]).unwrap(),
            render_scene(&cfg, &sites[1]).unwrap()
        );
    }

    #[test]
    fn higher_density_only_adds_buildings() {
        let lo = small(4);
        let hi = SceneConfig {
            building_density_target: 1.0,
            ..lo.clone()
        };
        for (a, b) in plan_sites(&lo).unwrap().iter().zip(plan_sites(&hi).unwrap()) {
            assert_eq!(*a, b);
            let m1 = render_scene(&lo, a).unwrap().mask;
            let m2 = render_scene(&hi, &b).unwrap().mask;
            assert!(m1.values().iter().zip(m2.values()).all(|(x, y)| x <= y));
        }
    }

    #[test]
    fn nir_lower_on_buildings_than_vegetation() {
        let cfg = small(12);
        for site in plan_sites(&cfg).unwrap() {
            let (tile, cover) = render_scene_with_cover(&cfg, &site).unwrap();
            let mean_nir = |pred: &dyn Fn(LandCover) -> bool| {
                let v: Vec<f64> = cover
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| pred(c))
                    .map(|(i, _)| tile.raster.data[i * N_CHANNELS + 4] as f64)
                    .collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            let built = mean_nir(&|c| matches!(c, LandCover::BrightRoof | LandCover::DarkRoof));
            let veg = mean_nir(&|c| c == LandCover::Vegetation);
            if let (Some(b), Some(v)) = (built, veg) {
                assert!(b < v, "tile {}: {b} vs {v}", site.index);
            }
            for (i, c) in cover.iter().enumerate() {
                let is_roof = matches!(c, LandCover::BrightRoof | LandCover::DarkRoof);
                assert_eq!(is_roof, tile.mask.values()[i] == 1);
            }
        }
    }
}
