use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame-level features of one song.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    song_id: String,
    frame_times: Vec<f64>,
    frames: Array2<f64>,
    feature_names: Vec<String>,
}

impl FeatureSeries {
    pub fn new(
        song_id: impl Into<String>,
        frame_times: Vec<f64>,
        frames: Array2<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let song_id = song_id.into();
        if frames.nrows() != frame_times.len() {
            return Err(Error::DimensionMismatch {
                expected: frame_times.len(),
                got: frames.nrows(),
            });
        }
        if frames.ncols() != feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                got: frames.ncols(),
            });
        }
        if frame_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidData(format!(
                "song `{song_id}`: frame times are not strictly increasing"
            )));
        }
        Ok(FeatureSeries {
            song_id,
            frame_times,
            frames,
            feature_names,
        })
    }

    pub fn song_id(&self) -> &str {
        &self.song_id
    }

    pub fn frame_times(&self) -> &[f64] {
        &self.frame_times
    }

    pub fn frames(&self) -> ArrayView2<'_, f64> {
        self.frames.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_frames(&self) -> usize {
        self.frame_times.len()
    }
}

/// Keep the frames with `t_start <= t <= t_end`.
pub fn clip_window(series: &FeatureSeries, t_start: f64, t_end: f64) -> Result<FeatureSeries> {
    if !(t_start <= t_end) {
        return Err(Error::InvalidArgument(format!("window [{t_start}, {t_end}] is empty")));
    }
    let keep: Vec<usize> = series
        .frame_times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= t_start && t <= t_end)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyWindow {
            song: series.song_id.clone(),
            start: t_start,
            end: t_end,
        });
    }
    Ok(FeatureSeries {
        song_id: series.song_id.clone(),
        frame_times: keep.iter().map(|&i| series.frame_times[i]).collect(),
        frames: series.frames.select(Axis(0), &keep),
        feature_names: series.feature_names.clone(),
    })
}

/// Per-feature arithmetic mean over frames.
pub fn temporal_mean(series: &FeatureSeries) -> Result<Array1<f64>> {
    series.frames.mean_axis(Axis(0)).ok_or_else(|| Error::EmptyWindow {
        song: series.song_id.clone(),
        start: f64::NEG_INFINITY,
        end: f64::INFINITY,
    })
}

/// Column means and population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub constant_mask: Vec<bool>,
}

impl ColumnStats {
    pub fn fit(x: ArrayView2<'_, f64>) -> ColumnStats {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        let mut constant_mask = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let first = col.first().copied().unwrap_or(0.0);
            let constant = col.iter().all(|&v| v == first);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means.push(if constant { first } else { mean });
            stds.push(if constant { 0.0 } else { var.sqrt() });
            constant_mask.push(constant);
        }
        ColumnStats {
            means,
            stds,
            constant_mask,
        }
    }

    /// Standardise `x` with these statistics; constant columns become zero.
    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            if self.constant_mask[j] {
                col.fill(0.0);
            } else {
                let (m, s) = (self.means[j], self.stds[j]);
                col.mapv_inplace(|v| (v - m) / s);
            }
        }
        Ok(out)
    }
}

/// Column-wise z-score with population standard deviation. Columns with a
/// single repeated value map to zeros and are flagged in the stats.
pub fn zscore_normalize(x: ArrayView2<'_, f64>) -> (Array2<f64>, ColumnStats) {
    let stats = ColumnStats::fit(x);
    let normalized = stats.apply(x).expect("stats fitted on the same matrix");
    (normalized, stats)
}
