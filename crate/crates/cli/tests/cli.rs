mod common;

use std::collections::BTreeMap;
use std::fs;

use common::*;
use coverest::eval::GrowthRate;
use coverest::synthdata::load_dataset;
use coverest_cli::{cmd_eval, cmd_temporal, EvalArgs, RunManifest, SplitChoice, TemporalArgs, EXIT_CONFIG, EXIT_IO};

#[test]
fn gen_data_writes_dataset_and_run_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scene.json");
    fs::write(&cfg, r#"{"n_tiles": 3, "tile_size": 200}"#).unwrap();
    let out = dir.path().join("data");
    let o = coverest(&["gen-data", "--config", p(&cfg), "--out", p(&out), "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ds = load_dataset(&out).unwrap();
    assert_eq!(ds.manifest.tiles.len(), 3);
    assert_eq!(ds.manifest.n_patches(), 48);
    let run: RunManifest = serde_json::from_slice(&fs::read(out.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(run.command, "gen-data");
    assert_eq!(run.config_digest.as_ref().unwrap().len(), 64);
    assert!(run.outputs.contains_key("manifest.json") && run.outputs.contains_key("dataset"));

    // same inputs, same digests
    let again = dir.path().join("again");
    assert!(
        coverest(&["gen-data", "--config", p(&cfg), "--out", p(&again), "--seed", "5"])
            .status
            .success()
    );
    let run2: RunManifest = serde_json::from_slice(&fs::read(again.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(run.outputs, run2.outputs);
    assert_eq!(run.config_digest, run2.config_digest);
}

#[test]
fn malformed_config_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"n_tiles\": 3,\n  \"tile_size\" 200\n}").unwrap();
    let o = coverest(&[
        "gen-data",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.path().join("d")),
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("column"), "{err}");
}

#[test]
fn invalid_config_values_and_missing_seed_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"tile_size": 120}"#).unwrap();
    let o = coverest(&[
        "gen-data",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.path().join("d")),
        "--seed",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(EXIT_CONFIG),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = coverest(&["gen-data", "--out", p(&dir.path().join("d"))]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let o = coverest(&["train", "--data", p(dir.path()), "--out", p(&dir.path().join("t"))]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    fs::write(&file, "x").unwrap();
    let out = file.join("data");
    let o = coverest(&["gen-data", "--out", p(&out), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(EXIT_IO), "{}", String::from_utf8_lossy(&o.stderr));
    let o = coverest(&[
        "eval",
        "--checkpoint",
        p(&file),
        "--data",
        p(dir.path()),
        "--out",
        p(&dir.path().join("e")),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
}

#[test]
fn train_with_unknown_region_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_oracle_dataset(&data, &small_scene(1, 4));
    let o = coverest(&[
        "train",
        "--data",
        p(&data),
        "--out",
        p(&dir.path().join("t")),
        "--seed",
        "1",
        "--setting",
        "exclusive:R9",
    ]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("R1"));
}

#[test]
fn oracle_checkpoint_scores_zero_error_and_reports_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_oracle_dataset(&data, &small_scene(3, 6));
    let ckpt = write_oracle_checkpoint(&dir.path().join("oracle.ckpt"));
    let args = |out: &str| EvalArgs {
        checkpoint: ckpt.clone(),
        data: data.clone(),
        out: dir.path().join(out),
        split: SplitChoice::All,
        split_file: None,
    };
    let (_, summary) = cmd_eval(&args("e1")).unwrap();
    // exact up to f32 rounding of the pooled averages
    assert!(summary.metrics.mae < 1e-3, "MAE {}", summary.metrics.mae);
    assert!(summary.mean_tile_abs_error < 1e-5);
    assert_eq!(summary.n_tiles, 6);
    let tiles_csv = fs::read_to_string(dir.path().join("e1/tiles.csv")).unwrap();
    assert_eq!(tiles_csv.lines().count(), 1 + 6);

    cmd_eval(&args("e2")).unwrap();
    for f in ["patches.csv", "tiles.csv", "scatter.csv", "summary.json"] {
        assert_eq!(
            fs::read(dir.path().join("e1").join(f)).unwrap(),
            fs::read(dir.path().join("e2").join(f)).unwrap(),
            "{f}"
        );
    }
}

fn true_region_coverage(tiles: &[coverest::raster::Tile]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for t in tiles {
        let e = acc.entry(t.region_tag().to_string()).or_default();
        e.0 += t.mask.count_ones();
        e.1 += (t.mask.height * t.mask.width) as u64;
    }
    acc.into_iter()
        .map(|(k, (ones, area))| (k, ones as f64 / area as f64 * 100.0))
        .collect()
}

#[test]
fn temporal_growth_tracks_generator_truth() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = write_oracle_checkpoint(&dir.path().join("oracle.ckpt"));
    let t1_cfg = coverest::synthdata::SceneConfig {
        building_density_target: 0.3,
        ..small_scene(7, 16)
    };
    let t2_cfg = coverest::synthdata::SceneConfig {
        building_density_target: 0.6,
        ..t1_cfg.clone()
    };
    let t1 = write_oracle_dataset(&dir.path().join("t1"), &t1_cfg);
    let t2 = write_oracle_dataset(&dir.path().join("t2"), &t2_cfg);
    let run = |a: &str, b: &str, out: &str| {
        cmd_temporal(&TemporalArgs {
            checkpoint: ckpt.clone(),
            t1: dir.path().join(a),
            t2: dir.path().join(b),
            out: dir.path().join(out),
        })
        .unwrap()
        .1
    };

    let same = run("t1", "t1", "same");
    assert!(!same.is_empty());
    for r in &same {
        assert_eq!(r.growth, GrowthRate::Defined(0.0), "{r:?}");
    }

    let (c1, c2) = (true_region_coverage(&t1), true_region_coverage(&t2));
    let grown = run("t1", "t2", "grown");
    assert_eq!(grown.len(), c1.len());
    for r in &grown {
        let g = r.growth.value().expect("defined");
        let truth = (c2[&r.region_tag] - c1[&r.region_tag]) / c1[&r.region_tag] * 100.0;
        assert!(g > 0.0, "{r:?}");
        assert!((g - truth).abs() < 1e-3, "{} vs {truth}", g);
    }
    let csv = fs::read_to_string(dir.path().join("grown/growth.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + grown.len());
}

#[test]
fn zero_coverage_region_is_flagged_undefined() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = write_oracle_checkpoint(&dir.path().join("oracle.ckpt"));
    let mut t1_cfg = small_scene(9, 16);
    for r in &mut t1_cfg.regions {
        if r.tag == "R2" {
            r.style.density_scale = 0.0;
        }
    }
    write_oracle_dataset(&dir.path().join("t1"), &t1_cfg);
    write_oracle_dataset(&dir.path().join("t2"), &small_scene(9, 16));
    let (_, rows) = cmd_temporal(&TemporalArgs {
        checkpoint: ckpt,
        t1: dir.path().join("t1"),
        t2: dir.path().join("t2"),
        out: dir.path().join("out"),
    })
    .unwrap();
    let r2 = rows.iter().find(|r| r.region_tag == "R2").expect("R2 sampled");
    assert_eq!(r2.growth, GrowthRate::Undefined);
    assert!(rows.iter().any(|r| r.growth.value().is_some()));
    let csv = fs::read_to_string(dir.path().join("out/growth.csv")).unwrap();
    assert!(
        csv.lines().any(|l| l.starts_with("R2,") && l.ends_with(",false")),
        "{csv}"
    );
}

#[test]
fn train_eval_predict_and_single_node_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_oracle_dataset(&data, &small_scene(2, 12));
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"train": {"batch_size": 16}, "model": {"n_blocks": 1, "base_width": 8}}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = coverest(&[
        "train",
        "--data",
        p(&data),
        "--config",
        p(&cfg),
        "--out",
        p(&out),
        "--seed",
        "4",
        "--epochs",
        "2",
        "--ablation",
        "single-node",
        "--setting",
        "exclusive:R1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "model.ckpt",
        "trace.csv",
        "loss_trace.csv",
        "split.json",
        "run_manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let state = coverest::train::load_checkpoint(out.join("model.ckpt")).unwrap();
    assert_eq!(state.quantiles().levels(), &[0.5]);
    let split: coverest_cli::SplitRecord = serde_json::from_slice(&fs::read(out.join("split.json")).unwrap()).unwrap();
    assert!(split.audit.ok);
    assert_eq!(split.audit.train_by_region.get("R1").copied().unwrap_or(0), 0);
    assert_eq!(
        fs::read_to_string(out.join("loss_trace.csv")).unwrap().lines().count(),
        3
    );

    let ev = dir.path().join("eval");
    let o = coverest(&[
        "eval",
        "--checkpoint",
        p(&out.join("model.ckpt")),
        "--data",
        p(&data),
        "--out",
        p(&ev),
        "--split",
        "test",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let n_test_tiles = split
        .test
        .iter()
        .map(|r| r.tile)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    assert_eq!(
        fs::read_to_string(ev.join("tiles.csv")).unwrap().lines().count(),
        1 + n_test_tiles
    );

    let pr = dir.path().join("pred");
    let o = coverest(&[
        "predict",
        "--checkpoint",
        p(&out.join("model.ckpt")),
        "--data",
        p(&data),
        "--out",
        p(&pr),
    ]);
    assert!(o.status.success());
    assert_eq!(
        fs::read_to_string(pr.join("predictions.csv")).unwrap().lines().count(),
        1 + 12 * 16
    );
    assert_eq!(
        fs::read_to_string(pr.join("coverage.csv")).unwrap().lines().count(),
        1 + 12
    );
}

#[test]
fn baseline_scores_masks_per_tile() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let tiles = write_oracle_dataset(&data, &small_scene(4, 3));
    let masks = dir.path().join("masks");
    fs::create_dir_all(&masks).unwrap();
    for t in &tiles {
        // an empty product misses every building
        let empty = coverest::raster::BinaryMask::zeros(t.mask.height, t.mask.width, t.mask.gsd);
        coverest::raster::write_mask_cras(masks.join(format!("{}.cras", t.id)), &empty, t.region_tag()).unwrap();
    }
    let out = dir.path().join("out");
    let o = coverest(&["baseline", "--data", p(&data), "--masks", p(&masks), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("baseline.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    for (t, line) in tiles.iter().zip(&lines[1..]) {
        let truth = coverest::eval::coverage_from_mask(&t.mask);
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], t.id);
        assert!((fields[3].parse::<f64>().unwrap() - truth).abs() < 1e-12);
    }
    fs::remove_file(masks.join(format!("{}.cras", tiles[1].id))).unwrap();
    let o = coverest(&["baseline", "--data", p(&data), "--masks", p(&masks), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
}
