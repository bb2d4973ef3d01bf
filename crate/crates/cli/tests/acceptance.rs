//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. AC10 runs only when `DEAM_DIR` points at a DEAM download.

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;

use mersel::dataset::{generate_synthetic, zscore_normalize, SyntheticSpec, Target};
use mersel::evaluation::{kfold_partition, mae, r2_score};
use mersel::forest::{fit_tree, predict_forest, predict_tree, train_forest, ForestImportance, ForestParams};
use mersel::rng::rng_from_seed;
use mersel::selection::{compute_reduction_rate, select_features, EstimatorKind, EstimatorSpec};
use mersel::svr::{dual_objective, kkt_residual, train_svr, Gamma, Kernel, SvrParams};
use mersel_cli::commands::{cmd_benchmark, cmd_ingest, cmd_select, IngestSource, BENCHMARK_CSV, BENCHMARK_JSON, BENCHMARK_MD};
use mersel_cli::RunConfig;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: {a} vs {b}"))
}

fn ac1_metrics() -> Check {
    let y = [1.0, 2.0, 3.0];
    close(r2_score(&y, &[1.0, 2.0, 3.0]).map_err(|e| e.to_string())?, 1.0, 1e-12, "perfect fit")?;
    close(r2_score(&y, &[2.0, 2.0, 2.0]).map_err(|e| e.to_string())?, 0.0, 1e-12, "mean predictor")?;
    close(r2_score(&y, &[3.0, 2.0, 1.0]).map_err(|e| e.to_string())?, -3.0, 1e-12, "reversed triple")?;
    close(mae(&y, 2.0), 2.0 / 3.0, 1e-12, "mae([1,2,3], 2)")?;
    close(mae(&[0.5, 0.5], 0.5), 0.0, 1e-12, "mae of constant")?;
    close(mae(&[0.0, 4.0], 0.0), 2.0, 1e-12, "mae([0,4], 0)")?;
    Ok("6 identities".into())
}

fn ac2_svr_oracle() -> Check {
    let params = SvrParams { c: 1.0, epsilon: 0.1, kernel: Kernel::Rbf, gamma: Gamma::Value(1.0), ..SvrParams::default() };
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (x, y) = oracles::svr_instance(1000 + seed);
        let model = train_svr(x.view(), y.view(), &params).map_err(|e| e.to_string())?;
        let solved = dual_objective(&model, x.view(), y.view()).map_err(|e| e.to_string())?;
        let k = Array2::from_shape_fn((3, 3), |(i, j)| (-(x[[i, 0]] - x[[j, 0]]).powi(2)).exp());
        let grid = oracles::svr_grid_minimum(&k, y.as_slice().unwrap(), params.c, params.epsilon);
        close(solved, grid, 1e-4 * (1.0 + grid.abs()), &format!("instance {seed} dual objective"))?;
        let kkt = kkt_residual(&model, x.view(), y.view()).map_err(|e| e.to_string())?;
        ensure(kkt < 1e-3, || format!("instance {seed}: kkt residual {kkt}"))?;
        worst = worst.max((solved - grid).abs());
    }
    Ok(format!("20 instances, max |solver - grid| = {worst:.2e}"))
}

fn ac3_tree_oracle() -> Check {
    let params = ForestParams { n_trees: 1, bootstrap: false, ..ForestParams::default() };
    let mut rng = rng_from_seed(3);
    for seed in 0..100 {
        let (x, y) = oracles::tree_instance(2000 + seed);
        let tree = fit_tree(x.view(), y.view(), &params, seed).map_err(|e| e.to_string())?;
        oracles::check_tree(&tree, x.view(), y.view()).map_err(|e| format!("instance {seed}: {e}"))?;
        let queries = Array2::from_shape_fn((8, x.ncols()), |_| rng.random_range(-1..=5) as f64 / 4.0);
        for q in x.rows().into_iter().chain(queries.rows()) {
            let got = predict_tree(&tree, q).map_err(|e| e.to_string())?;
            let want = oracles::oracle_predict(x.view(), y.view(), q);
            ensure(got == want, || format!("instance {seed}: predicted {got}, oracle {want}"))?;
        }
    }
    Ok("100 instances".into())
}

fn ac4_ensemble() -> Check {
    let mut rng = rng_from_seed(4);
    for batch in 0..50 {
        let (n, d) = (rng.random_range(5..40), rng.random_range(1..5));
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        let params = ForestParams { n_trees: rng.random_range(1..12), ..ForestParams::default() };
        let model = train_forest(x.view(), y.view(), &params, batch).map_err(|e| e.to_string())?;
        let q = Array2::from_shape_fn((10, d), |_| rng.random_range(-1.5..1.5));
        let pred = predict_forest(&model, q.view()).map_err(|e| e.to_string())?;
        for (row, &p) in q.rows().into_iter().zip(&pred) {
            let trees = model.tree_predictions(row).map_err(|e| e.to_string())?;
            let mean = trees.iter().sum::<f64>() / trees.len() as f64;
            ensure(p == mean, || format!("batch {batch}: forest {p}, tree mean {mean}"))?;
        }

        // Continuous draws make every training row distinct.
        let single = ForestParams { n_trees: 1, bootstrap: false, ..ForestParams::default() };
        let model = train_forest(x.view(), y.view(), &single, batch).map_err(|e| e.to_string())?;
        let fit = predict_forest(&model, x.view()).map_err(|e| e.to_string())?;
        let sse: f64 = fit.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        ensure(sse == 0.0, || format!("batch {batch}: single tree training error {sse}"))?;
    }
    Ok("50 batches".into())
}

fn ac5_signal_recovery() -> Check {
    let spec = SyntheticSpec::default();
    let estimator = EstimatorSpec::Forest { params: ForestParams::default(), importance: ForestImportance::Impurity };
    let mut passed = 0;
    let mut detail = Vec::new();
    for seed in 0..5 {
        let (ds, informative) = generate_synthetic(&spec, seed).map_err(|e| e.to_string())?;
        let sfs = select_features(&ds, Target::Valence, &estimator, 10, 1, seed).map_err(|e| e.to_string())?;
        let hits = sfs.selected_indices.iter().filter(|j| informative.contains(j)).count();
        if hits >= 9 && sfs.chosen_size <= 20 {
            passed += 1;
        }
        detail.push(format!("{hits}/10 in {}", sfs.chosen_size));
    }
    let msg = format!("{passed}/5 seeds recover >= 9 of 10 within 20 ({})", detail.join(", "));
    if passed >= 4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ac6_reduction_rates() -> Check {
    let printed = [(115, 55.8), (74, 71.6), (203, 22.0), (38, 85.4)];
    for (kept, pct) in printed {
        let rate = compute_reduction_rate(260, kept).map_err(|e| e.to_string())?;
        close(100.0 * rate, pct, 0.15, &format!("260 -> {kept}"))?;
    }
    Ok("4 pairs within 0.15 pp".into())
}

/// Small synthetic workspace shared by the end-to-end criteria.
fn pipeline_config(out_dir: &Path, threads: Option<usize>) -> RunConfig {
    let mut cfg = RunConfig { seed: Some(2024), out_dir: out_dir.to_path_buf(), threads, ..RunConfig::default() };
    cfg.synthetic = SyntheticSpec::new(150, 4, 8, 0.1);
    cfg.forest.n_trees = 25;
    cfg
}

/// Ingest, select every cell and benchmark; returns the selection paths.
fn run_pipeline(cfg: &RunConfig) -> Result<Vec<PathBuf>, String> {
    let ingested = cmd_ingest(&IngestSource::Synthetic, "dataset.csv", cfg).map_err(|e| format!("{e:#}"))?;
    let mut paths = Vec::new();
    for kind in EstimatorKind::ALL {
        for target in Target::ALL {
            let cell = RunConfig { estimator: kind, target, ..cfg.clone() };
            paths.push(cmd_select(&ingested.dataset_path, &cell).map_err(|e| format!("{e:#}"))?.artifact_path);
        }
    }
    cmd_benchmark(&ingested.dataset_path, &paths, cfg).map_err(|e| format!("{e:#}"))?;
    Ok(paths)
}

fn ac7_benchmark_structure() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = pipeline_config(tmp.path(), None);
    run_pipeline(&cfg)?;

    let mut folds: BTreeMap<(String, String, String), Vec<f64>> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(tmp.path().join(BENCHMARK_CSV)).map_err(|e| e.to_string())?;
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let score: f64 = rec[5].parse().map_err(|_| format!("bad score {}", &rec[5]))?;
        folds.entry((rec[0].to_string(), rec[1].to_string(), rec[2].to_string())).or_default().push(score);
    }
    ensure(folds.len() == 8, || format!("{} cells in the fold CSV", folds.len()))?;

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join(BENCHMARK_JSON)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let rows = json["report"]["rows"].as_array().ok_or("no rows")?;
    ensure(rows.len() == 8, || format!("{} report rows", rows.len()))?;
    for row in rows {
        let key = (
            row["model"].as_str().unwrap_or_default().to_string(),
            row["target"].as_str().unwrap_or_default().to_string(),
            row["feature_set"].as_str().unwrap_or_default().to_string(),
        );
        let scores = folds.get(&key).ok_or_else(|| format!("{key:?} missing from CSV"))?;
        ensure(scores.len() == 10, || format!("{key:?}: {} folds", scores.len()))?;
        let mean = scores.iter().sum::<f64>() / 10.0;
        let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 10.0).sqrt();
        close(row["score"].as_f64().unwrap_or(f64::NAN), mean, 1e-12, &format!("{key:?} score"))?;
        close(row["std"].as_f64().unwrap_or(f64::NAN), std, 1e-12, &format!("{key:?} std"))?;
    }
    let md = fs::read_to_string(tmp.path().join(BENCHMARK_MD)).map_err(|e| e.to_string())?;
    ensure(md.lines().next() == Some("| Model | Type | Feature Set | Use Features | Score | STD |"), || "table header".into())?;
    ensure(md.lines().count() == 10, || format!("{} table lines", md.lines().count()))?;
    Ok("8 rows recomputed from 80 fold scores".into())
}

fn ac8_partition_and_zscore() -> Check {
    let mut partitions = 0;
    for n in 2..=200 {
        for k in 2..=n {
            partitions += 1;
            let plan = kfold_partition(n, k, (n * 1000 + k) as u64).map_err(|e| e.to_string())?;
            let sizes = plan.fold_sizes();
            ensure(sizes.iter().sum::<usize>() == n, || format!("n={n} k={k}: sizes {sizes:?}"))?;
            let (base, extra) = (n / k, n % k);
            for (f, &s) in sizes.iter().enumerate() {
                ensure(s == base + usize::from(f < extra), || format!("n={n} k={k}: fold {f} has {s}"))?;
            }
            let mut seen = vec![0usize; n];
            for f in 0..k {
                let (train, test) = plan.split_indices(f);
                ensure(train.len() + test.len() == n, || format!("n={n} k={k}: fold {f} loses rows"))?;
                test.iter().for_each(|&i| seen[i] += 1);
            }
            ensure(seen.iter().all(|&c| c == 1), || format!("n={n} k={k}: a row is tested twice or never"))?;
        }
    }
    let mut rng = rng_from_seed(8);
    for m in 0..100 {
        let (n, d) = (rng.random_range(2..60), rng.random_range(1..8));
        let scale = 10f64.powi(rng.random_range(-3..4));
        let x = Array2::from_shape_fn((n, d), |_| scale * rng.random_range(-5.0..5.0) + 3.0);
        let (z, _) = zscore_normalize(x.view());
        for (j, col) in z.columns().into_iter().enumerate() {
            let mean = col.sum() / n as f64;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            ensure(mean.abs() < 1e-9 && (std - 1.0).abs() < 1e-9, || format!("matrix {m} column {j}: mean {mean}, std {std}"))?;
        }
    }
    Ok(format!("{partitions} partitions, 100 matrices"))
}

/// Every machine-readable file in `dir`, with fold timings zeroed.
fn artifacts(dir: &Path) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.ends_with(".svg") {
            continue;
        }
        let mut text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        if name == BENCHMARK_JSON {
            let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            for row in v["report"]["rows"].as_array_mut().ok_or("no rows")? {
                row["cv"]["fold_elapsed_secs"] = serde_json::Value::Null;
            }
            text = v.to_string();
        }
        out.insert(name, text);
    }
    Ok(out)
}

fn ac9_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [("first", None), ("second", None), ("serial", Some(1)), ("parallel", Some(4))];
    let mut outputs = Vec::new();
    // Same directory every time: artifacts record their input paths.
    let dir = tmp.path().join("out");
    for (name, threads) in runs {
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| e.to_string())?;
        }
        run_pipeline(&pipeline_config(&dir, threads))?;
        outputs.push((name, artifacts(&dir)?));
    }
    let (base_name, base) = &outputs[0];
    for (name, files) in &outputs[1..] {
        ensure(files.keys().eq(base.keys()), || format!("{name} wrote different files than {base_name}"))?;
        for (file, text) in files {
            ensure(text == &base[file], || format!("{file} differs between {base_name} and {name}"))?;
        }
    }
    Ok(format!("{} artifacts identical over 4 runs (fold timings excluded)", base.len()))
}

fn ac10_deam() -> Option<Check> {
    let root = PathBuf::from(std::env::var_os("DEAM_DIR")?);
    Some(run_deam(&root))
}

/// Standard DEAM download layout; each path can be overridden.
fn deam_path(var: &str, root: &Path, default: &str) -> PathBuf {
    std::env::var_os(var).map(PathBuf::from).unwrap_or_else(|| root.join(default))
}

fn run_deam(root: &Path) -> Check {
    let features = deam_path("DEAM_FEATURES", root, "features");
    let dynamic = "annotations/annotations averaged per song/dynamic (per second annotations)";
    let valence = deam_path("DEAM_VALENCE", root, &format!("{dynamic}/valence.csv"));
    let arousal = deam_path("DEAM_AROUSAL", root, &format!("{dynamic}/arousal.csv"));
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = RunConfig { seed: Some(0), out_dir: tmp.path().to_path_buf(), ..RunConfig::default() };
    cfg.cells = Some(Target::ALL.iter().map(|&t| (EstimatorKind::Svr, t)).collect());
    if let Some(step) = std::env::var("DEAM_STEP").ok().and_then(|s| s.parse().ok()) {
        cfg.step = step;
    }
    let source = IngestSource::Deam { features, valence, arousal };
    let ingested = cmd_ingest(&source, "deam.csv", &cfg).map_err(|e| format!("{e:#}"))?;
    let mut paths = Vec::new();
    for target in Target::ALL {
        let cell = RunConfig { estimator: EstimatorKind::Svr, target, ..cfg.clone() };
        paths.push(cmd_select(&ingested.dataset_path, &cell).map_err(|e| format!("{e:#}"))?.artifact_path);
    }
    let report = cmd_benchmark(&ingested.dataset_path, &paths, &cfg).map_err(|e| format!("{e:#}"))?.report;
    let deltas: Vec<String> = report.deltas.iter().map(|d| format!("{} {:+.3}", d.target, d.score_delta)).collect();
    let msg = format!("SVR SFS - CFS: {}", deltas.join(", "));
    if report.deltas.len() == 2 && report.deltas.iter().all(|d| d.score_delta > 0.0) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [(&str, &str, fn() -> Option<Check>); 10] = [
        ("AC1", "metric identities", || Some(ac1_metrics())),
        ("AC2", "SVR dual against grid oracle", || Some(ac2_svr_oracle())),
        ("AC3", "tree against exhaustive split oracle", || Some(ac3_tree_oracle())),
        ("AC4", "ensemble identity and memorization", || Some(ac4_ensemble())),
        ("AC5", "RFECV signal recovery", || Some(ac5_signal_recovery())),
        ("AC6", "reduction rate arithmetic", || Some(ac6_reduction_rates())),
        ("AC7", "benchmark structure", || Some(ac7_benchmark_structure())),
        ("AC8", "partition and z-score laws", || Some(ac8_partition_and_zscore())),
        ("AC9", "determinism", || Some(ac9_determinism())),
        ("AC10", "DEAM directional check", ac10_deam),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Some(Err(format!("panicked: {}", msg.unwrap_or_default())))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Some(Ok(detail)) => println!("{id} PASS {name}: {detail} ({secs:.1}s)"),
            Some(Err(why)) => {
                failed += 1;
                println!("{id} FAIL {name}: {why} ({secs:.1}s)");
            }
            None => println!("{id} SKIP {name}: DEAM_DIR not set"),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
