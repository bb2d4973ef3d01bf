//! The four pipeline commands. Each one resolves its inputs, computes every
//! output in memory and only then writes, so a failure leaves no partial
//! machine-readable artifact behind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mersel::dataset::{self, generate_synthetic, load_canonical, load_deam, write_canonical, zscore_normalize, ColumnStats, Dataset, Target};
use mersel::emotion::{categorize_dataset, mode_labels, CategoryMode, QuadrantLabel, VaPoint};
use mersel::evaluation::{benchmark, fold_scores_csv, fold_scores_svg, score_bars_svg, to_markdown, BenchmarkConfig, BenchmarkReport};
use mersel::selection::{select_features, EstimatorKind, SelectedFeatureSet};

use crate::config::{Format, RunConfig};
use crate::output::{to_json, va_scatter_svg, Pending, ScatterPoint};

#[derive(Debug, Clone, PartialEq)]
pub enum IngestSource {
    /// An existing canonical CSV, re-validated and optionally normalised.
    Canonical(PathBuf),
    /// Per-song feature files plus valence and arousal annotation tables.
    Deam { features: PathBuf, valence: PathBuf, arousal: PathBuf },
    /// Linear data from the `[synthetic]` section of the config.
    Synthetic,
}

/// Sidecar written next to an ingested dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub inputs: Vec<PathBuf>,
    pub n_samples: usize,
    pub n_features: usize,
    /// Clipping window in seconds (DEAM only).
    pub window: Option<[f64; 2]>,
    pub skipped_songs: Vec<String>,
    /// Statistics the feature matrix was standardised with.
    pub normalization: Option<ColumnStats>,
    /// Valence and arousal divisors that brought synthetic targets into
    /// [-1, 1].
    pub target_divisors: Option<[f64; 2]>,
    /// Ground-truth informative columns (synthetic only).
    pub informative: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub dataset_path: PathBuf,
    pub provenance_path: PathBuf,
    pub provenance: Provenance,
}

/// Sidecar path for a dataset file: `data.csv` -> `data.provenance.json`.
pub fn provenance_path(dataset_path: &Path) -> PathBuf {
    let stem = dataset_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    dataset_path.with_file_name(format!("{stem}.provenance.json"))
}

pub fn cmd_ingest(source: &IngestSource, output_name: &str, cfg: &RunConfig) -> Result<IngestOutcome> {
    let mut cfg = cfg.clone();
    let (raw, mut prov) = match source {
        IngestSource::Canonical(path) => {
            let ds = load_canonical(path, cfg.canonical_scaling).with_context(|| format!("ingesting {}", path.display()))?;
            (ds, provenance("canonical", vec![path.clone()]))
        }
        IngestSource::Deam { features, valence, arousal } => {
            let (ds, report) = cfg
                .install(|| load_deam(features, valence, arousal, &cfg.adapter))?
                .with_context(|| format!("ingesting DEAM layout from {}", features.display()))?;
            let mut prov = provenance("deam", vec![features.clone(), valence.clone(), arousal.clone()]);
            prov.window = Some([cfg.adapter.window_start, cfg.adapter.window_end]);
            prov.skipped_songs = report.skipped;
            (ds, prov)
        }
        IngestSource::Synthetic => {
            let seed = cfg.resolve_seed();
            let (ds, informative) = generate_synthetic(&cfg.synthetic, seed).context("generating synthetic data")?;
            let (ds, divisors) = ds.scale_targets_to_unit();
            let mut prov = provenance("synthetic", Vec::new());
            prov.target_divisors = Some(divisors);
            prov.informative = Some(informative);
            prov.seed = Some(seed);
            (ds, prov)
        }
    };
    let ds = if cfg.normalize {
        let (z, stats) = zscore_normalize(raw.features());
        prov.normalization = Some(stats);
        raw.with_features(z)?
    } else {
        raw
    };
    prov.n_samples = ds.n_samples();
    prov.n_features = ds.n_features();
    prov.config = cfg.clone();

    let dataset_path = cfg.out_dir.join(output_name);
    let sidecar = provenance_path(&dataset_path);
    let mut csv = Vec::new();
    write_canonical(&ds, &mut csv)?;
    let mut pending = Pending::default();
    pending.add(dataset_path.clone(), csv);
    pending.add(sidecar.clone(), to_json(&prov)?);
    pending.commit()?;
    Ok(IngestOutcome { dataset_path, provenance_path: sidecar, provenance: prov })
}

fn provenance(source: &str, inputs: Vec<PathBuf>) -> Provenance {
    Provenance {
        source: source.into(),
        inputs,
        n_samples: 0,
        n_features: 0,
        window: None,
        skipped_songs: Vec::new(),
        normalization: None,
        target_divisors: None,
        informative: None,
        seed: None,
        config: RunConfig::default(),
    }
}

/// The selection artifact: the selected feature set plus how it was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionArtifact {
    pub selection: SelectedFeatureSet,
    pub dataset: PathBuf,
    /// Rows the selection ran on (after the ratio split).
    pub selection_rows: usize,
    pub config: RunConfig,
}

impl SelectionArtifact {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let artifact: SelectionArtifact = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Re-run the artifact's own consistency checks.
        SelectedFeatureSet::from_json(&serde_json::to_string(&artifact.selection)?).with_context(|| format!("validating {}", path.display()))?;
        Ok(artifact)
    }
}

#[derive(Debug, Clone)]
pub struct SelectOutcome {
    pub artifact_path: PathBuf,
    pub chosen_size: usize,
    pub n_features: usize,
    pub reduction_rate: f64,
}

pub fn load_dataset(path: &Path, cfg: &RunConfig) -> Result<Dataset> {
    load_canonical(path, cfg.canonical_scaling).with_context(|| format!("loading dataset {}", path.display()))
}

/// Rows used for selection: the `ratio` part of a seeded split, or every
/// row when `ratio` is 1.
pub fn selection_part(ds: &Dataset, ratio: f64, seed: u64) -> Result<Dataset> {
    if ratio >= 1.0 {
        return Ok(ds.clone());
    }
    Ok(dataset::split(ds, ratio, seed)?.0)
}

/// Rows left out of selection.
pub fn holdout_part(ds: &Dataset, ratio: f64, seed: u64) -> Result<Dataset> {
    if ratio >= 1.0 {
        bail!("--holdout needs ratio < 1");
    }
    Ok(dataset::split(ds, ratio, seed)?.1)
}

pub fn selection_file_name(kind: EstimatorKind, target: Target) -> String {
    format!("sfs_{kind}_{target}.json")
}

pub fn cmd_select(dataset_path: &Path, cfg: &RunConfig) -> Result<SelectOutcome> {
    let mut cfg = cfg.clone();
    let seed = cfg.resolve_seed();
    let ds = load_dataset(dataset_path, &cfg)?;
    let part = selection_part(&ds, cfg.ratio, seed)?;
    let spec = cfg.estimator_spec(cfg.estimator);
    let sfs = cfg
        .install(|| select_features(&part, cfg.target, &spec, cfg.folds, cfg.step, seed))?
        .with_context(|| format!("selecting features for {} with {}", cfg.target, cfg.estimator))?;
    let outcome = SelectOutcome {
        artifact_path: cfg.out_dir.join(selection_file_name(cfg.estimator, cfg.target)),
        chosen_size: sfs.chosen_size,
        n_features: sfs.n_features_total,
        reduction_rate: sfs.reduction_rate()?,
    };
    let artifact = SelectionArtifact {
        selection: sfs,
        dataset: dataset_path.to_path_buf(),
        selection_rows: part.n_samples(),
        config: cfg,
    };
    let mut pending = Pending::default();
    pending.add(outcome.artifact_path.clone(), to_json(&artifact)?);
    pending.commit()?;
    Ok(outcome)
}

/// `benchmark.json` contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkArtifact {
    pub report: BenchmarkReport,
    pub dataset: PathBuf,
    pub selections: Vec<PathBuf>,
    pub holdout: bool,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub report: BenchmarkReport,
    pub written: Vec<PathBuf>,
}

pub const BENCHMARK_JSON: &str = "benchmark.json";
pub const BENCHMARK_MD: &str = "benchmark.md";
pub const BENCHMARK_CSV: &str = "benchmark_folds.csv";
pub const SCORES_SVG: &str = "benchmark_scores.svg";
pub const FOLDS_SVG: &str = "benchmark_folds.svg";

pub fn cmd_benchmark(dataset_path: &Path, selections: &[PathBuf], cfg: &RunConfig) -> Result<BenchmarkOutcome> {
    let mut cfg = cfg.clone();
    let seed = cfg.resolve_seed();
    let ds = load_dataset(dataset_path, &cfg)?;
    let mut artifacts = BTreeMap::new();
    for path in selections {
        let a = SelectionArtifact::load(path)?;
        let key = (a.selection.estimator.kind(), a.selection.target);
        if artifacts.insert(key, a.selection).is_some() {
            bail!("{} repeats the {}/{} cell", path.display(), key.0, key.1);
        }
    }
    let data = if cfg.holdout { holdout_part(&ds, cfg.ratio, seed)? } else { ds };
    let bench_cfg = BenchmarkConfig {
        folds: cfg.folds,
        seed,
        svr: cfg.svr.clone(),
        forest: cfg.forest.clone(),
        cells: cfg.cells(),
    };
    let report = cfg.install(|| benchmark(&data, &artifacts, &bench_cfg))?.context("running the benchmark")?;

    let dir = &cfg.out_dir;
    let mut pending = Pending::default();
    if cfg.wants(Format::Json) {
        let artifact = BenchmarkArtifact {
            report: report.clone(),
            dataset: dataset_path.to_path_buf(),
            selections: selections.to_vec(),
            holdout: cfg.holdout,
            config: cfg.clone(),
        };
        pending.add(dir.join(BENCHMARK_JSON), to_json(&artifact)?);
    }
    if cfg.wants(Format::Md) {
        pending.add(dir.join(BENCHMARK_MD), to_markdown(&report));
    }
    if cfg.wants(Format::Csv) {
        pending.add(dir.join(BENCHMARK_CSV), fold_scores_csv(&report));
    }
    if cfg.plots {
        pending.add(dir.join(SCORES_SVG), score_bars_svg(&report));
        pending.add(dir.join(FOLDS_SVG), fold_scores_svg(&report));
    }
    let written = pending.commit()?;
    Ok(BenchmarkOutcome { report, written })
}

#[derive(Debug, Clone)]
pub struct ClassifyOutcome {
    pub csv_path: PathBuf,
    pub svg_path: Option<PathBuf>,
    pub counts: Vec<(String, usize)>,
}

pub const CLASSIFY_CSV: &str = "categories.csv";
pub const CLASSIFY_SVG: &str = "categories.svg";

const SECTOR_COLORS: [&str; 8] = ["#d62728", "#ff7f0e", "#8c564b", "#2ca02c", "#1f77b4", "#9467bd", "#e6c700", "#17becf"];

/// Read `(id, point)` pairs from a CSV with `valence` and `arousal` columns
/// and an id column named `song_id` or `id` (else the first column). Every
/// out-of-box row is reported, numbered with the header as row 1.
pub fn read_annotations(path: &Path) -> Result<Vec<(String, VaPoint)>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers().with_context(|| format!("reading the header of {}", path.display()))?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(vi), Some(ai)) = (find("valence"), find("arousal")) else {
        bail!("{}: header needs `valence` and `arousal` columns", path.display());
    };
    let id_col = find("song_id").or_else(|| find("id")).unwrap_or(0);
    let mut points = Vec::new();
    let mut problems = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.with_context(|| format!("{}: row {row}", path.display()))?;
        let value = |c: usize| -> Result<f64, String> {
            let cell = record.get(c).unwrap_or("").trim();
            cell.parse::<f64>().map_err(|_| format!("row {row}: `{cell}` is not a number"))
        };
        match (value(vi), value(ai)) {
            (Ok(v), Ok(a)) => match VaPoint::new(v, a) {
                Ok(p) => points.push((record.get(id_col).unwrap_or("").to_string(), p)),
                Err(_) => problems.push(format!("row {row}: ({v}, {a}) is outside the unit box")),
            },
            (Err(e), _) | (_, Err(e)) => problems.push(e),
        }
    }
    if !problems.is_empty() {
        bail!("{}: {} rejected row(s)\n  {}", path.display(), problems.len(), problems.join("\n  "));
    }
    Ok(points)
}

pub fn cmd_classify(annotations: &Path, cfg: &RunConfig) -> Result<ClassifyOutcome> {
    let points = read_annotations(annotations)?;
    let cat = categorize_dataset(&points, cfg.mode, &cfg.layout).context("categorizing points")?;
    let names = mode_labels(cfg.mode, &cfg.layout);
    let legend: Vec<(String, String)> = match cfg.mode {
        CategoryMode::Quadrant => QuadrantLabel::ALL.iter().map(|q| (q.as_str().to_string(), q.color().to_string())).collect(),
        CategoryMode::Hevner => names.iter().zip(SECTOR_COLORS).map(|(n, c)| (n.clone(), c.to_string())).collect(),
    };

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["id", "valence", "arousal", "label"])?;
    let mut scatter = Vec::with_capacity(points.len());
    for ((id, p), (_, label)) in points.iter().zip(&cat.labels) {
        csv.write_record([id.as_str(), &p.valence().to_string(), &p.arousal().to_string(), label.as_str()])?;
        let series = names.iter().position(|n| n == label).expect("label comes from the mode");
        scatter.push(ScatterPoint { x: p.valence(), y: p.arousal(), series });
    }
    let csv = csv.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;

    let csv_path = cfg.out_dir.join(CLASSIFY_CSV);
    let svg_path = cfg.plots.then(|| cfg.out_dir.join(CLASSIFY_SVG));
    let mut pending = Pending::default();
    pending.add(csv_path.clone(), csv);
    if let Some(path) = &svg_path {
        let title = match cfg.mode {
            CategoryMode::Quadrant => "Valence-arousal quadrants",
            CategoryMode::Hevner => "Valence-arousal sectors",
        };
        pending.add(path.clone(), va_scatter_svg(title, &scatter, &legend));
    }
    pending.commit()?;
    Ok(ClassifyOutcome { csv_path, svg_path, counts: cat.counts })
}
