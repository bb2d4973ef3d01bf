//! Adapter for the DEAM distribution layout: one delimited frame-level
//! feature file per song plus two wide annotation tables (one row per song,
//! one column per annotation timestamp).

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{clip_window, song_id_order, temporal_mean, Dataset, FeatureSeries, TargetScaling};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterConfig {
    /// Field delimiter of the per-song feature files.
    pub delimiter: char,
    /// Extension of the per-song feature files, without the dot.
    pub extension: String,
    /// Column holding the frame time in seconds; excluded from the features.
    pub timestamp_column: String,
    /// Restrict and order features to this list. `None` keeps every
    /// non-timestamp column in file order.
    pub feature_names: Option<Vec<String>>,
    pub annotation_delimiter: char,
    pub annotation_id_column: String,
    /// Annotation columns are `<prefix><milliseconds><suffix>`.
    pub annotation_prefix: String,
    pub annotation_suffix: String,
    pub window_start: f64,
    pub window_end: f64,
    /// Largest tolerated fraction of feature files lacking an annotation.
    pub max_missing_fraction: f64,
    pub target_scaling: TargetScaling,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        AdapterConfig {
            delimiter: ';',
            extension: "csv".into(),
            timestamp_column: "frameTime".into(),
            feature_names: None,
            annotation_delimiter: ',',
            annotation_id_column: "song_id".into(),
            annotation_prefix: "sample_".into(),
            annotation_suffix: "ms".into(),
            window_start: 15.0,
            window_end: 44.5,
            max_missing_fraction: 0.1,
            target_scaling: TargetScaling::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeamReport {
    pub feature_files: usize,
    /// Songs dropped because an annotation was missing or had no samples in
    /// the window, in song-id order.
    pub skipped: Vec<String>,
}

type Annotations = HashMap<String, Vec<(f64, f64)>>;

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::InvalidArgument(format!("delimiter {c:?} is not a single ASCII byte")))
}

fn read_annotations(path: &Path, cfg: &AdapterConfig) -> Result<Annotations> {
    let parse_err = |row, column, message| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter_byte(cfg.annotation_delimiter)?)
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| parse_err(1, None, e.to_string()))?,
        None => return Err(parse_err(1, None, "missing header".into())),
    };
    let id_col = header
        .iter()
        .position(|h| h.trim() == cfg.annotation_id_column)
        .ok_or_else(|| parse_err(1, None, format!("no `{}` column", cfg.annotation_id_column)))?;
    let times: Vec<(usize, f64)> = header
        .iter()
        .enumerate()
        .filter_map(|(col, h)| {
            let ms = h.trim().strip_prefix(&cfg.annotation_prefix)?.strip_suffix(&cfg.annotation_suffix)?;
            ms.parse::<f64>().ok().map(|ms| (col, ms / 1000.0))
        })
        .collect();

    let mut out = Annotations::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| parse_err(row, None, e.to_string()))?;
        let Some(id) = rec.get(id_col).map(str::trim).filter(|s| !s.is_empty()) else {
            continue;
        };
        let mut samples = Vec::with_capacity(times.len());
        for &(col, t) in &times {
            // annotation rows are ragged: songs shorter than the longest one
            // have trailing empty cells
            let Some(cell) = rec.get(col).map(str::trim).filter(|s| !s.is_empty()) else {
                continue;
            };
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(row, Some(col + 1), format!("bad annotation value `{cell}`")))?;
            samples.push((t, v));
        }
        out.insert(id.to_string(), samples);
    }
    Ok(out)
}

fn read_feature_file(path: &Path, song_id: &str, cfg: &AdapterConfig) -> Result<FeatureSeries> {
    let parse_err = |row, column, message| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter_byte(cfg.delimiter)?)
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| parse_err(1, None, e.to_string()))?,
        None => return Err(parse_err(1, None, "missing header".into())),
    };
    let header: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    let time_col = header
        .iter()
        .position(|h| *h == cfg.timestamp_column)
        .ok_or_else(|| parse_err(1, None, format!("no `{}` column", cfg.timestamp_column)))?;
    let columns: Vec<usize> = match &cfg.feature_names {
        Some(names) => names
            .iter()
            .map(|name| {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| parse_err(1, None, format!("configured feature `{name}` not found")))
            })
            .collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&c| c != time_col).collect(),
    };
    let names: Vec<String> = columns.iter().map(|&c| header[c].clone()).collect();

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| parse_err(row, None, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(parse_err(row, None, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let cell = |c: usize| -> Result<f64> {
            let s = rec[c].trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(row, Some(c + 1), format!("not a finite number: `{s}`")))
        };
        times.push(cell(time_col)?);
        for &c in &columns {
            values.push(cell(c)?);
        }
    }
    let frames = Array2::from_shape_vec((times.len(), names.len()), values).expect("row widths checked");
    FeatureSeries::new(song_id, times, frames, names).map_err(|e| e.context(path.display().to_string()))
}

fn window_mean(samples: &[(f64, f64)], start: f64, end: f64) -> Option<f64> {
    let inside: Vec<f64> = samples.iter().filter(|(t, _)| *t >= start && *t <= end).map(|&(_, v)| v).collect();
    (!inside.is_empty()).then(|| inside.iter().sum::<f64>() / inside.len() as f64)
}

/// Build a song-level dataset from a DEAM-style directory.
///
/// Each feature file is clipped to the configured window and averaged over
/// time; each annotation is averaged over the same window. Songs missing
/// either annotation are skipped and reported. Features are not normalised
/// here.
pub fn load_deam(
    features_dir: impl AsRef<Path>,
    valence_file: impl AsRef<Path>,
    arousal_file: impl AsRef<Path>,
    cfg: &AdapterConfig,
) -> Result<(Dataset, DeamReport)> {
    let dir = features_dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().and_then(|e| e.to_str()) == Some(cfg.extension.as_str()) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                files.push((stem.to_string(), path));
            }
        }
    }
    if files.is_empty() {
        return Err(Error::InvalidData(format!(
            "{}: no `.{}` feature files",
            dir.display(),
            cfg.extension
        )));
    }
    files.sort_by(|a, b| song_id_order(&a.0, &b.0));

    let valence = read_annotations(valence_file.as_ref(), cfg)?;
    let arousal = read_annotations(arousal_file.as_ref(), cfg)?;
    let (start, end) = (cfg.window_start, cfg.window_end);

    let per_song: Vec<Result<Option<(String, Array1<f64>, Vec<String>, f64, f64)>>> = files
        .par_iter()
        .map(|(id, path)| {
            let targets = valence
                .get(id)
                .and_then(|s| window_mean(s, start, end))
                .zip(arousal.get(id).and_then(|s| window_mean(s, start, end)));
            let Some((v, a)) = targets else {
                return Ok(None);
            };
            let series = read_feature_file(path, id, cfg)?;
            let clipped = clip_window(&series, start, end)?;
            let means = temporal_mean(&clipped)?;
            Ok(Some((id.clone(), means, series.feature_names().to_vec(), v, a)))
        })
        .collect();

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut v_targets = Vec::new();
    let mut a_targets = Vec::new();
    let mut names: Option<Vec<String>> = None;
    let mut skipped = Vec::new();
    for ((id, _), result) in files.iter().zip(per_song) {
        match result? {
            None => skipped.push(id.clone()),
            Some((id, means, song_names, v, a)) => {
                match &names {
                    None => names = Some(song_names),
                    Some(n) if *n != song_names => {
                        return Err(Error::InvalidData(format!(
                            "song `{id}` has a different feature header from the first song"
                        )))
                    }
                    Some(_) => {}
                }
                ids.push(id);
                rows.push(means);
                v_targets.push(v);
                a_targets.push(a);
            }
        }
    }

    let missing = skipped.len() as f64 / files.len() as f64;
    if !skipped.is_empty() {
        log::warn!("skipped {} of {} songs without annotations in the window", skipped.len(), files.len());
    }
    if missing > cfg.max_missing_fraction {
        return Err(Error::InvalidData(format!(
            "{} of {} feature files have no matching annotation (tolerance {:.1}%)",
            skipped.len(),
            files.len(),
            cfg.max_missing_fraction * 100.0
        )));
    }
    let names = names.ok_or_else(|| Error::InvalidData("no annotated songs".into()))?;
    let d = names.len();
    let mut x = Array2::zeros((rows.len(), d));
    for (mut dst, src) in x.rows_mut().into_iter().zip(&rows) {
        dst.assign(src);
    }
    cfg.target_scaling.apply(&mut v_targets, &mut a_targets)?;
    let ds = Dataset::new(ids, names, x, Array1::from(v_targets), Array1::from(a_targets))?;
    Ok((
        ds,
        DeamReport {
            feature_files: files.len(),
            skipped,
        },
    ))
}
