//! Patch metrics, tile-level coverage, baseline-mask comparison, temporal
//! growth and report writers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nnet::ModelState;
use crate::raster::{BinaryMask, Patch};
use crate::synthdata::Dataset;
use crate::train::{load_refs, PatchRef};
use crate::{Error, Result, PATCH_AREA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    /// Squared Pearson correlation between predictions and labels.
    pub pearson_r2: f64,
    /// Coefficient of determination, `1 - SS_res / SS_tot`.
    pub r2_determination: f64,
    pub n_samples: usize,
    /// False when either side is constant and the correlation is undefined;
    /// `pearson_r2` is then NaN.
    pub pearson_defined: bool,
}

/// MAE and both r² variants. Constant labels or predictions leave Pearson's
/// r² undefined (NaN, flagged); constant labels also leave R² undefined.
pub fn patch_metrics(predictions: &[f64], labels: &[f64]) -> Result<MetricsReport> {
    let n = labels.len();
    if predictions.len() != n {
        return Err(Error::shape(format!("{n} predictions"), predictions.len()));
    }
    if n == 0 {
        return Err(Error::Empty("metrics over zero samples".into()));
    }
    let nf = n as f64;
    let mae = predictions.iter().zip(labels).map(|(p, y)| (p - y).abs()).sum::<f64>() / nf;
    let mean_p = predictions.iter().sum::<f64>() / nf;
    let mean_y = labels.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy, mut ss_res) = (0.0, 0.0, 0.0, 0.0);
    for (p, y) in predictions.iter().zip(labels) {
        let (dp, dy) = (p - mean_p, y - mean_y);
        sxy += dp * dy;
        sxx += dp * dp;
        syy += dy * dy;
        ss_res += (y - p) * (y - p);
    }
    let pearson_defined = sxx > 0.0 && syy > 0.0;
    let pearson_r2 = if pearson_defined {
        (sxy * sxy) / (sxx * syy)
    } else {
        f64::NAN
    };
    let r2_determination = if syy > 0.0 { 1.0 - ss_res / syy } else { f64::NAN };
    if !pearson_defined {
        log::warn!("Pearson r² is undefined: labels or predictions are constant");
    }
    Ok(MetricsReport {
        mae,
        pearson_r2,
        r2_determination,
        n_samples: n,
        pearson_defined,
    })
}

/// Percentage of building pixels in a tile from its patch counts.
pub fn tile_coverage(patch_counts: &[f64], tile_height: usize, tile_width: usize) -> Result<f64> {
    let area = (tile_height * tile_width) as f64;
    if area == 0.0 {
        return Err(Error::Geometry("tile has zero area".into()));
    }
    if let Some(bad) = patch_counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidValue(format!(
            "patch count {bad} is not a nonnegative number"
        )));
    }
    let total: f64 = patch_counts.iter().sum();
    if total > area {
        return Err(Error::InvalidValue(format!(
            "patch counts sum to {total}, more than the {tile_height}x{tile_width} tile area"
        )));
    }
    Ok(total / area * 100.0)
}

/// Absolute difference of two coverage percentages, in percentage points.
pub fn tile_abs_error(pred_coverage: f64, true_coverage: f64) -> f64 {
    (pred_coverage - true_coverage).abs()
}

pub fn coverage_from_mask(mask: &BinaryMask) -> f64 {
    mask.count_ones() as f64 / (mask.height * mask.width) as f64 * 100.0
}

/// Relative change between two coverages, or undefined from zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "percent", rename_all = "lowercase")]
pub enum GrowthRate {
    Defined(f64),
    Undefined,
}

impl GrowthRate {
    pub fn value(&self) -> Option<f64> {
        match self {
            GrowthRate::Defined(v) => Some(*v),
            GrowthRate::Undefined => None,
        }
    }
}

pub fn growth_rate(coverage_t1: f64, coverage_t2: f64) -> GrowthRate {
    if coverage_t1 > 0.0 {
        GrowthRate::Defined((coverage_t2 - coverage_t1) / coverage_t1 * 100.0)
    } else {
        GrowthRate::Undefined
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileReport {
    pub tile_id: String,
    pub region_tag: String,
    pub n_patches: usize,
    pub patch_predictions: Vec<f64>,
    pub coverage_pred: f64,
    pub coverage_true: f64,
    pub abs_error: f64,
}

/// Node outputs for a batch of patches, in eval mode.
pub fn predict_nodes(state: &ModelState, patches: &[Patch]) -> Result<Vec<Vec<f32>>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        patches.par_iter().map(|p| state.predict_nodes(&p.input)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        patches.iter().map(|p| state.predict_nodes(&p.input)).collect()
    }
}

/// Median-node count estimate, capped to the patch area.
pub fn median_estimate(state: &ModelState, nodes: &[f32]) -> f64 {
    let idx = state.quantiles().median_index().expect("validated at construction");
    (nodes[idx] as f64).min(PATCH_AREA as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRow {
    pub tile_id: String,
    pub region_tag: String,
    pub row: usize,
    pub col: usize,
    pub label: u32,
    pub prediction: f64,
    /// All node outputs, in quantile order.
    pub nodes: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDiagnostics {
    pub quantiles: Vec<f64>,
    /// Share of patches whose node outputs are out of the order implied by
    /// the loss (node q estimates the (1 - q)-quantile, so outputs should be
    /// non-increasing in q).
    pub crossing_rate: f64,
    /// Share of labels inside the [min node, max node] band.
    pub band_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub metrics: MetricsReport,
    pub n_tiles: usize,
    /// Mean tile absolute error in percentage points (NaN without complete tiles).
    pub mean_tile_abs_error: f64,
    pub per_region: BTreeMap<String, MetricsReport>,
    pub nodes: NodeDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub patches: Vec<PatchRow>,
    pub tiles: Vec<TileReport>,
    pub summary: Summary,
}

fn node_diagnostics(quantiles: &[f64], rows: &[PatchRow]) -> NodeDiagnostics {
    let n = rows.len().max(1) as f64;
    let crossing = rows.iter().filter(|r| r.nodes.windows(2).any(|w| w[1] > w[0])).count() as f64;
    let inside = rows
        .iter()
        .filter(|r| {
            let lo = r.nodes.iter().copied().fold(f32::INFINITY, f32::min) as f64;
            let hi = r.nodes.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
            (lo..=hi).contains(&(r.label as f64))
        })
        .count() as f64;
    NodeDiagnostics {
        quantiles: quantiles.to_vec(),
        crossing_rate: crossing / n,
        band_coverage: inside / n,
    }
}

/// Evaluate on `refs`. Tiles are reported only when every one of their
/// patches is among `refs`.
pub fn evaluate(state: &ModelState, dataset: &Dataset, refs: &[PatchRef]) -> Result<Evaluation> {
    if refs.is_empty() {
        return Err(Error::Empty("no patches to evaluate".into()));
    }
    let mut refs = refs.to_vec();
    refs.sort();
    let patches = load_refs(dataset, &refs)?;
    let nodes = predict_nodes(state, &patches)?;
    let rows: Vec<PatchRow> = patches
        .iter()
        .zip(nodes)
        .map(|(p, n)| PatchRow {
            tile_id: p.tile_id.clone(),
            region_tag: p.region_tag.clone(),
            row: p.offset.0,
            col: p.offset.1,
            label: p.label,
            prediction: median_estimate(state, &n),
            nodes: n,
        })
        .collect();

    let preds: Vec<f64> = rows.iter().map(|r| r.prediction).collect();
    let labels: Vec<f64> = rows.iter().map(|r| r.label as f64).collect();
    let metrics = patch_metrics(&preds, &labels)?;

    let mut per_region_rows: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &rows {
        let e = per_region_rows.entry(r.region_tag.clone()).or_default();
        e.0.push(r.prediction);
        e.1.push(r.label as f64);
    }
    let per_region = per_region_rows
        .into_iter()
        .map(|(k, (p, y))| Ok((k, patch_metrics(&p, &y)?)))
        .collect::<Result<_>>()?;

    let mut tiles = Vec::new();
    let mut i = 0;
    while i < refs.len() {
        let t = refs[i].tile;
        let j = refs[i..].iter().position(|r| r.tile != t).map_or(refs.len(), |k| i + k);
        let entry = &dataset.manifest.tiles[t];
        if j - i == entry.patches.len() {
            let p: Vec<f64> = rows[i..j].iter().map(|r| r.prediction).collect();
            let y: Vec<f64> = rows[i..j].iter().map(|r| r.label as f64).collect();
            let coverage_pred = tile_coverage(&p, entry.height, entry.width)?;
            let coverage_true = tile_coverage(&y, entry.height, entry.width)?;
            tiles.push(TileReport {
                tile_id: entry.id.clone(),
                region_tag: entry.region_tag.clone(),
                n_patches: j - i,
                patch_predictions: p,
                coverage_pred,
                coverage_true,
                abs_error: tile_abs_error(coverage_pred, coverage_true),
            });
        } else {
            log::debug!("tile {} is only partly in the split; no tile report", entry.id);
        }
        i = j;
    }
    let mean_tile_abs_error = if tiles.is_empty() {
        f64::NAN
    } else {
        tiles.iter().map(|t| t.abs_error).sum::<f64>() / tiles.len() as f64
    };
    let summary = Summary {
        metrics,
        n_tiles: tiles.len(),
        mean_tile_abs_error,
        per_region,
        nodes: node_diagnostics(state.quantiles().levels(), &rows),
    };
    Ok(Evaluation {
        patches: rows,
        tiles,
        summary,
    })
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_csv<R: Serialize>(path: &Path, header: Option<&[&str]>, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(header.is_none())
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    if let Some(h) = header {
        w.write_record(h).map_err(|e| csv_err(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
    json.push(b'\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// `patches.csv`, `tiles.csv`, `scatter.csv` and `summary.json` under `dir`.
pub fn write_reports(dir: &Path, eval: &Evaluation) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let k = eval.summary.nodes.quantiles.len();
    let mut header: Vec<String> = ["tile_id", "region_tag", "row", "col", "label", "prediction"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(eval.summary.nodes.quantiles.iter().map(|q| format!("node_q{q}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    write_csv(
        &dir.join("patches.csv"),
        Some(&header_refs),
        eval.patches.iter().map(|r| {
            debug_assert_eq!(r.nodes.len(), k);
            (&r.tile_id, &r.region_tag, r.row, r.col, r.label, r.prediction, &r.nodes)
        }),
    )?;
    write_csv(
        &dir.join("tiles.csv"),
        Some(&[
            "tile_id",
            "region_tag",
            "n_patches",
            "coverage_true",
            "coverage_pred",
            "abs_error",
        ]),
        eval.tiles.iter().map(|t| {
            (
                &t.tile_id,
                &t.region_tag,
                t.n_patches,
                t.coverage_true,
                t.coverage_pred,
                t.abs_error,
            )
        }),
    )?;
    write_csv(
        &dir.join("scatter.csv"),
        Some(&["ground_truth", "prediction"]),
        eval.patches.iter().map(|r| (r.label, r.prediction)),
    )?;
    write_json(&dir.join("summary.json"), &eval.summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrowth {
    pub region_tag: String,
    pub n_tiles_t1: usize,
    pub n_tiles_t2: usize,
    pub coverage_t1: f64,
    pub coverage_t2: f64,
    pub growth: GrowthRate,
}

/// Predicted coverage per region: total predicted count over total area.
fn region_coverage(state: &ModelState, dataset: &Dataset) -> Result<BTreeMap<String, (usize, f64)>> {
    let mut acc: BTreeMap<String, (usize, f64, f64)> = BTreeMap::new();
    for entry in &dataset.manifest.tiles {
        let patches = dataset.tile_patches(entry)?;
        let nodes = predict_nodes(state, &patches)?;
        let total: f64 = nodes.iter().map(|n| median_estimate(state, n)).sum();
        let e = acc.entry(entry.region_tag.clone()).or_insert((0, 0.0, 0.0));
        e.0 += 1;
        e.1 += total;
        e.2 += (entry.height * entry.width) as f64;
    }
    Ok(acc
        .into_iter()
        .map(|(k, (n, total, area))| (k, (n, total / area * 100.0)))
        .collect())
}

/// Region-level growth between two acquisitions of the same regions.
pub fn temporal_growth(state: &ModelState, t1: &Dataset, t2: &Dataset) -> Result<Vec<RegionGrowth>> {
    let c1 = region_coverage(state, t1)?;
    let c2 = region_coverage(state, t2)?;
    let mut regions: Vec<&String> = c1.keys().chain(c2.keys()).collect();
    regions.sort();
    regions.dedup();
    Ok(regions
        .into_iter()
        .map(|tag| {
            let (n1, a) = c1.get(tag).copied().unwrap_or((0, 0.0));
            let (n2, b) = c2.get(tag).copied().unwrap_or((0, 0.0));
            let growth = if n1 == 0 || n2 == 0 {
                GrowthRate::Undefined
            } else {
                growth_rate(a, b)
            };
            RegionGrowth {
                region_tag: tag.clone(),
                n_tiles_t1: n1,
                n_tiles_t2: n2,
                coverage_t1: a,
                coverage_t2: b,
                growth,
            }
        })
        .collect())
}

pub fn write_growth_csv(path: &Path, rows: &[RegionGrowth]) -> Result<()> {
    write_csv(
        path,
        Some(&[
            "region_tag",
            "n_tiles_t1",
            "n_tiles_t2",
            "coverage_t1",
            "coverage_t2",
            "growth_percent",
            "defined",
        ]),
        rows.iter().map(|r| {
            (
                &r.region_tag,
                r.n_tiles_t1,
                r.n_tiles_t2,
                r.coverage_t1,
                r.coverage_t2,
                r.growth.value().map(|v| v.to_string()).unwrap_or_default(),
                r.growth.value().is_some(),
            )
        }),
    )
}

/// Tile-level comparison of an external binary product against truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskComparison {
    pub tile_id: String,
    pub coverage_baseline: f64,
    pub coverage_true: f64,
    pub abs_error: f64,
}

pub fn compare_mask(tile_id: &str, baseline: &BinaryMask, truth: &BinaryMask) -> Result<MaskComparison> {
    if baseline.height != truth.height || baseline.width != truth.width {
        return Err(Error::Geometry(format!(
            "baseline {}x{} and truth {}x{} differ",
            baseline.height, baseline.width, truth.height, truth.width
        )));
    }
    let (b, t) = (coverage_from_mask(baseline), coverage_from_mask(truth));
    Ok(MaskComparison {
        tile_id: tile_id.to_string(),
        coverage_baseline: b,
        coverage_true: t,
        abs_error: tile_abs_error(b, t),
    })
}

pub fn write_mask_comparison_csv(path: &Path, rows: &[MaskComparison]) -> Result<()> {
    write_csv(path, None, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn perfect_and_affine_fits() {
        let y: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let m = patch_metrics(&y, &y).unwrap();
        assert_eq!((m.mae, m.pearson_r2, m.r2_determination), (0.0, 1.0, 1.0));
        let p: Vec<f64> = y.iter().map(|v| 2.0 * v + 5.0).collect();
        let m = patch_metrics(&p, &y).unwrap();
        assert!((m.pearson_r2 - 1.0).abs() < 1e-12);
        assert!(m.r2_determination < 1.0);
    }

    #[test]
    fn constant_labels_flag_pearson() {
        let m = patch_metrics(&[1.0, 2.0, 3.0], &[4.0; 3]).unwrap();
        assert!(!m.pearson_defined && m.pearson_r2.is_nan());
        assert_eq!(m.mae, 2.0);
        assert!(patch_metrics(&[], &[]).is_err());
        assert!(patch_metrics(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn coverage_examples() {
        assert_eq!(tile_coverage(&[0.0; 16], 200, 200).unwrap(), 0.0);
        assert_eq!(tile_coverage(&[2500.0; 16], 200, 200).unwrap(), 100.0);
        let mut counts = vec![0.0; 16];
        counts[3] = 500.0;
        assert_eq!(tile_coverage(&counts, 200, 200).unwrap(), 1.25);
        assert!(tile_coverage(&[2500.0; 17], 200, 200).is_err());
        assert!(tile_coverage(&[-1.0], 200, 200).is_err());
        assert_eq!(tile_abs_error(1.25, 1.25), 0.0);
        assert_eq!(tile_abs_error(2.0, 0.5), 1.5);
    }

    #[test]
    fn mask_coverage_and_growth() {
        assert_eq!(coverage_from_mask(&BinaryMask::zeros(4, 4, 10.0)), 0.0);
        let half = BinaryMask::new(2, 2, 10.0, vec![1, 0, 1, 0]).unwrap();
        assert_eq!(coverage_from_mask(&half), 50.0);
        assert_eq!(growth_rate(10.0, 10.0), GrowthRate::Defined(0.0));
        let g = growth_rate(10.0, 12.968).value().unwrap();
        assert!((g - 29.68).abs() < 1e-9);
        assert_eq!(growth_rate(10.0, 5.0), GrowthRate::Defined(-50.0));
        assert_eq!(growth_rate(0.0, 5.0), GrowthRate::Undefined);
    }

    #[test]
    fn tile_coverage_matches_mask_coverage() {
        let mut rng = crate::rng::stream(1, &[]);
        use rand::Rng;
        let values: Vec<u8> = (0..200 * 200).map(|_| (rng.random::<f64>() < 0.3) as u8).collect();
        let mask = BinaryMask::new(200, 200, 10.0, values).unwrap();
        let counts: Vec<f64> = crate::raster::patch_windows(200, 200)
            .into_iter()
            .map(|w| crate::raster::count_building_pixels(&mask, w).unwrap() as f64)
            .collect();
        assert!(rel(tile_coverage(&counts, 200, 200).unwrap(), coverage_from_mask(&mask)) < 1e-12);
    }

    proptest! {
        #[test]
        fn pearson_affine_invariant_r2_not(
            y in prop::collection::vec(0f64..2500.0, 3..50),
            noise in prop::collection::vec(-50f64..50.0, 50),
            a in 0.1f64..10.0,
            b in -100f64..100.0,
        ) {
            let p: Vec<f64> = y.iter().zip(&noise).map(|(v, n)| v + n).collect();
            let base = patch_metrics(&p, &y).unwrap();
            prop_assume!(base.pearson_defined);
            let q: Vec<f64> = p.iter().map(|v| a * v + b).collect();
            let moved = patch_metrics(&q, &y).unwrap();
            prop_assert!((moved.pearson_r2 - base.pearson_r2).abs() < 1e-9);
            prop_assert!(moved.r2_determination <= 1.0);
        }

        #[test]
        fn abs_error_symmetric_and_bounded(a in 0f64..=100.0, b in 0f64..=100.0) {
            prop_assert_eq!(tile_abs_error(a, b), tile_abs_error(b, a));
            prop_assert!((0.0..=100.0).contains(&tile_abs_error(a, b)));
        }
    }
}
