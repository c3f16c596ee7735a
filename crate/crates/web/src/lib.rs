//! Browser bindings: render a synthetic scene, draw pinball curves, and fit
//! a constant quantile predictor. Built with `wasm-pack build --target web`.

use rand_distr::{Distribution, LogNormal};
use wasm_bindgen::prelude::*;

use coverest::qloss::{pinball, pinball_grad};
use coverest::raster::crop_into_patches;
use coverest::synthdata::{plan_sites, render_scene, SceneConfig};

fn js_err(e: coverest::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// One rendered tile as RGBA images plus its labels.
#[wasm_bindgen]
pub struct SceneView {
    size: usize,
    region: String,
    rgb: Vec<u8>,
    nir: Vec<u8>,
    s1: Vec<u8>,
    mask: Vec<u8>,
    labels: Vec<u32>,
    coverage: f64,
}

#[wasm_bindgen]
impl SceneView {
    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.size
    }
    #[wasm_bindgen(getter)]
    pub fn region(&self) -> String {
        self.region.clone()
    }
    pub fn rgb(&self) -> Vec<u8> {
        self.rgb.clone()
    }
    pub fn nir(&self) -> Vec<u8> {
        self.nir.clone()
    }
    pub fn s1(&self) -> Vec<u8> {
        self.s1.clone()
    }
    pub fn mask(&self) -> Vec<u8> {
        self.mask.clone()
    }
    /// Building pixels per 50x50 patch, row-major over the 4x4 patch grid.
    pub fn labels(&self) -> Vec<u32> {
        self.labels.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn coverage(&self) -> f64 {
        self.coverage
    }
}

fn to_byte(v: f32, lo: f32, hi: f32) -> u8 {
    (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 255.0) as u8
}

fn rgba(size: usize, px: impl Fn(usize) -> [u8; 3]) -> Vec<u8> {
    let mut out = Vec::with_capacity(size * size * 4);
    for i in 0..size * size {
        let [r, g, b] = px(i);
        out.extend_from_slice(&[r, g, b, 255]);
    }
    out
}

/// Render tile `index` of a corpus with the given seed and building density.
#[wasm_bindgen]
pub fn render(seed: u64, index: usize, density: f64) -> Result<SceneView, JsValue> {
    let config = SceneConfig {
        seed,
        n_tiles: index + 1,
        building_density_target: density,
        ..SceneConfig::default()
    };
    config.validate().map_err(js_err)?;
    let site = &plan_sites(&config).map_err(js_err)?[index];
    let tile = render_scene(&config, site).map_err(js_err)?;
    let (patches, _) = crop_into_patches(&tile).map_err(js_err)?;
    let size = tile.raster.height;
    let r = &tile.raster;
    let (rr, cc) = (|i: usize| i / size, |i: usize| i % size);
    Ok(SceneView {
        size,
        region: site.region_tag.clone(),
        rgb: rgba(size, |i| [1, 2, 3].map(|c| to_byte(r.get(rr(i), cc(i), c), 0.0, 0.45))),
        nir: rgba(size, |i| [to_byte(r.get(rr(i), cc(i), 4), 0.0, 0.6); 3]),
        s1: rgba(size, |i| [to_byte(r.get(rr(i), cc(i), 0), 0.0, 1.2); 3]),
        mask: rgba(size, |i| [if tile.mask.get(rr(i), cc(i)) == 1 { 255 } else { 20 }; 3]),
        labels: patches.iter().map(|p| p.label).collect(),
        coverage: coverest::eval::coverage_from_mask(&tile.mask),
    })
}

/// Pinball loss at `n` evenly spaced predictions in `[lo, hi]`.
#[wasm_bindgen]
pub fn pinball_curve(q: f64, y: f64, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n)
        .map(|i| pinball(q, y, lo + step * i as f64).map_err(js_err))
        .collect()
}

/// Fit a constant to log-normal samples by subgradient descent on the
/// pinball loss. Returns `[fitted, q-quantile, (1 - q)-quantile]`.
#[wasm_bindgen]
pub fn fit_constant(q: f64, n: usize, sigma: f64, seed: u64) -> Result<Vec<f64>, JsValue> {
    let dist = LogNormal::new(0.0, sigma).map_err(|e| JsValue::from_str(&e.to_string()))?;
    let mut rng = coverest::rng::stream(seed, &[]);
    let samples: Vec<f64> = (0..n.max(1)).map(|_| dist.sample(&mut rng)).collect();
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let quantile = |p: f64| sorted[((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];

    let count = samples.len() as f64;
    let mut c = samples.iter().sum::<f64>() / count;
    for t in 0..2000 {
        let mut g = 0.0;
        for &y in &samples {
            g += pinball_grad(q, y, c).map_err(js_err)?;
        }
        c -= 0.5 / (1.0 + t as f64).sqrt() * g / count;
    }
    Ok(vec![c, quantile(q), quantile(1.0 - q)])
}
