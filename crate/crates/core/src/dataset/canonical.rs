//! The canonical dataset CSV:
//!
//! ```text
//! song_id,<feature_1>,...,<feature_D>,valence,arousal
//! ```
//!
//! UTF-8, comma separated, `.` as decimal point, no thousands separators.
//! Values are written with the shortest representation that parses back to
//! the same `f64`, so save followed by load is lossless.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// How raw target values are brought onto the [-1, 1] axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TargetScaling {
    /// Keep targets already inside [-1, 1]. Otherwise, if every target lies
    /// in `source`, map it affinely onto [-1, 1]; anything else is an error.
    Auto { source: [f64; 2] },
    /// Always map affinely from `source`.
    Affine { source: [f64; 2] },
    /// Require targets already inside [-1, 1].
    Unit,
}

impl Default for TargetScaling {
    /// Auto-detect with the 1..9 rating scale as the fallback source range.
    fn default() -> Self {
        TargetScaling::Auto { source: [1.0, 9.0] }
    }
}

fn affine_to_unit(v: f64, [lo, hi]: [f64; 2]) -> f64 {
    2.0 * (v - lo) / (hi - lo) - 1.0
}

impl TargetScaling {
    /// Rescale both target columns in place, treating them as one scale.
    pub(crate) fn apply(&self, valence: &mut [f64], arousal: &mut [f64]) -> Result<()> {
        let all = || valence.iter().chain(arousal.iter());
        let in_unit = all().all(|v| v.abs() <= 1.0);
        let source = match *self {
            TargetScaling::Unit if in_unit => return Ok(()),
            TargetScaling::Unit => {
                return Err(Error::InvalidData(
                    "target values outside [-1, 1] and no source range configured".into(),
                ))
            }
            TargetScaling::Auto { .. } if in_unit => return Ok(()),
            TargetScaling::Auto { source } => {
                if !all().all(|&v| v >= source[0] && v <= source[1]) {
                    return Err(Error::InvalidData(format!(
                        "target values outside both [-1, 1] and the source range [{}, {}]",
                        source[0], source[1]
                    )));
                }
                source
            }
            TargetScaling::Affine { source } => source,
        };
        if !(source[1] > source[0]) {
            return Err(Error::InvalidArgument(format!(
                "empty target source range [{}, {}]",
                source[0], source[1]
            )));
        }
        for v in valence.iter_mut().chain(arousal.iter_mut()) {
            *v = affine_to_unit(*v, source);
            if v.abs() > 1.0 {
                return Err(Error::InvalidData(format!(
                    "target outside [-1, 1] after rescaling from [{}, {}]",
                    source[0], source[1]
                )));
            }
        }
        Ok(())
    }
}

pub fn load_canonical(path: impl AsRef<Path>, scaling: TargetScaling) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_canonical(file, path, scaling)
}

/// Parse a canonical CSV from any reader. `origin` is only used in error
/// messages.
pub fn read_canonical(reader: impl Read, origin: &Path, scaling: TargetScaling) -> Result<Dataset> {
    let parse_err = |row: usize, column: Option<usize>, message: String| Error::Parse {
        path: origin.to_path_buf(),
        row,
        column,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| parse_err(1, None, e.to_string()))?,
        None => return Err(parse_err(1, None, "missing header".into())),
    };
    let width = header.len();
    if width < 4 {
        return Err(parse_err(
            1,
            None,
            format!("expected song_id, at least one feature, valence, arousal; found {width} columns"),
        ));
    }
    for (col, expected) in [(0, "song_id"), (width - 2, "valence"), (width - 1, "arousal")] {
        if header[col].trim() != expected {
            return Err(parse_err(
                1,
                Some(col + 1),
                format!("expected `{expected}`, found `{}`", &header[col]),
            ));
        }
    }
    let feature_names: Vec<String> = header.iter().skip(1).take(width - 3).map(|s| s.trim().to_string()).collect();
    let d = feature_names.len();

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut valence = Vec::new();
    let mut arousal = Vec::new();
    let mut seen = std::collections::HashSet::new();

    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| parse_err(row, None, e.to_string()))?;
        if rec.len() != width {
            return Err(parse_err(row, None, format!("expected {width} fields, found {}", rec.len())));
        }
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(parse_err(row, Some(1), "empty song_id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(parse_err(row, Some(1), format!("duplicate song_id `{id}`")));
        }
        for col in 1..width {
            let cell = rec[col].trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(row, Some(col + 1), format!("not a number: `{cell}`")))?;
            if !v.is_finite() {
                return Err(parse_err(row, Some(col + 1), format!("non-finite value `{cell}`")));
            }
            match col {
                c if c == width - 2 => valence.push(v),
                c if c == width - 1 => arousal.push(v),
                _ => values.push(v),
            }
        }
        ids.push(id);
    }

    scaling
        .apply(&mut valence, &mut arousal)
        .map_err(|e| e.context(origin.display().to_string()))?;
    let features = Array2::from_shape_vec((ids.len(), d), values).expect("row widths checked");
    Dataset::new(ids, feature_names, features, Array1::from(valence), Array1::from(arousal))
}

pub fn write_canonical(dataset: &Dataset, writer: impl Write) -> Result<()> {
    let io_err = |e: csv::Error| Error::InvalidData(format!("csv write: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    let mut header = Vec::with_capacity(dataset.n_features() + 3);
    header.push("song_id");
    header.extend(dataset.feature_names().iter().map(String::as_str));
    header.extend(["valence", "arousal"]);
    w.write_record(&header).map_err(io_err)?;

    let x = dataset.features();
    let (v, a) = (dataset.valence(), dataset.arousal());
    for (i, id) in dataset.song_ids().iter().enumerate() {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(id.clone());
        rec.extend(x.row(i).iter().map(|v| v.to_string()));
        rec.push(v[i].to_string());
        rec.push(a[i].to_string());
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::InvalidData(format!("csv write: {e}")))?;
    Ok(())
}

pub fn save_canonical(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_canonical(dataset, std::io::BufWriter::new(file))
}
