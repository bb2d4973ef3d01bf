//! Song-level data model, ingestion adapters and preprocessing.

mod canonical;
mod deam;
mod family;
mod preprocess;
mod synthetic;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use canonical::{load_canonical, read_canonical, save_canonical, write_canonical, TargetScaling};
pub use deam::{load_deam, AdapterConfig, DeamReport};
pub use family::{group_features_by_family, DEFAULT_FAMILY_PREFIXES, OTHER_FAMILY};
pub use preprocess::{clip_window, temporal_mean, zscore_normalize, ColumnStats, FeatureSeries};
pub use synthetic::{generate_synthetic, SyntheticSpec};

/// Which emotion axis a model is trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Valence,
    Arousal,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Valence, Target::Arousal];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Valence => "valence",
            Target::Arousal => "arousal",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "valence" => Ok(Target::Valence),
            "arousal" => Ok(Target::Arousal),
            other => Err(Error::InvalidArgument(format!("unknown target `{other}`"))),
        }
    }
}

/// N songs with D averaged features and one valence and arousal value each.
///
/// Construction checks shape agreement, finiteness and id uniqueness. The
/// unit-box bound on the targets is enforced by the file loaders, which are
/// the only place raw annotation scales are seen.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    song_ids: Vec<String>,
    feature_names: Vec<String>,
    features: Array2<f64>,
    valence: Array1<f64>,
    arousal: Array1<f64>,
}

impl Dataset {
    pub fn new(
        song_ids: Vec<String>,
        feature_names: Vec<String>,
        features: Array2<f64>,
        valence: Array1<f64>,
        arousal: Array1<f64>,
    ) -> Result<Self> {
        let n = song_ids.len();
        if features.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: features.nrows(),
            });
        }
        if features.ncols() != feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                got: features.ncols(),
            });
        }
        for len in [valence.len(), arousal.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &song_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateSongId(id.clone()));
            }
        }
        if let Some(((row, col), v)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature value {v} for song `{}`, feature `{}`",
                song_ids[row], feature_names[col]
            )));
        }
        for (name, target) in [("valence", &valence), ("arousal", &arousal)] {
            if let Some((i, v)) = target.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "non-finite {name} {v} for song `{}`",
                    song_ids[i]
                )));
            }
        }
        Ok(Dataset {
            song_ids,
            feature_names,
            features,
            valence,
            arousal,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.song_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn song_ids(&self) -> &[String] {
        &self.song_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn valence(&self) -> ArrayView1<'_, f64> {
        self.valence.view()
    }

    pub fn arousal(&self) -> ArrayView1<'_, f64> {
        self.arousal.view()
    }

    pub fn target(&self, target: Target) -> ArrayView1<'_, f64> {
        match target {
            Target::Valence => self.valence.view(),
            Target::Arousal => self.arousal.view(),
        }
    }

    /// Rows at `indices`, in the given order.
    pub fn subset_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            song_ids: indices.iter().map(|&i| self.song_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            features: self.features.select(Axis(0), indices),
            valence: self.valence.select(Axis(0), indices),
            arousal: self.arousal.select(Axis(0), indices),
        }
    }

    /// Columns at `indices`, in the given order. Panics on out-of-range
    /// indices; use `selection::apply_selection` for checked selection.
    pub fn select_columns(&self, indices: &[usize]) -> Dataset {
        Dataset {
            song_ids: self.song_ids.clone(),
            feature_names: indices.iter().map(|&j| self.feature_names[j].clone()).collect(),
            features: self.features.select(Axis(1), indices),
            valence: self.valence.clone(),
            arousal: self.arousal.clone(),
        }
    }

    /// Replace the feature matrix, e.g. with its normalised version.
    pub fn with_features(self, features: Array2<f64>) -> Result<Dataset> {
        Dataset::new(self.song_ids, self.feature_names, features, self.valence, self.arousal)
    }

    /// Scale each target by the inverse of its largest magnitude so both lie
    /// in [-1, 1]. Returns the divisors used (1 for an all-zero target).
    pub fn scale_targets_to_unit(mut self) -> (Dataset, [f64; 2]) {
        let mut divisors = [1.0; 2];
        for (slot, target) in [&mut self.valence, &mut self.arousal].into_iter().enumerate() {
            let max_abs = target.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max_abs > 0.0 {
                target.mapv_inplace(|v| v / max_abs);
                divisors[slot] = max_abs;
            }
        }
        (self, divisors)
    }
}

/// Selection-side size for a split of `n` rows at `ratio`.
pub fn selection_size(n: usize, ratio: f64) -> usize {
    // the epsilon absorbs representation error in ratios such as 0.7
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// Seeded, unstratified partition into a selection part of
/// `floor(ratio * N)` rows and a validation part with the rest. Both parts
/// keep the original row order.
pub fn split(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} not in (0, 1)")));
    }
    let n = dataset.n_samples();
    let n_sel = selection_size(n, ratio);
    if n_sel == 0 || n_sel == n {
        return Err(Error::InvalidArgument(format!(
            "split of {n} rows at ratio {ratio} leaves one side empty"
        )));
    }
    let perm = rng::permutation(n, seed);
    let mut selection = perm[..n_sel].to_vec();
    let mut validation = perm[n_sel..].to_vec();
    selection.sort_unstable();
    validation.sort_unstable();
    Ok((dataset.subset_rows(&selection), dataset.subset_rows(&validation)))
}

/// Ordering used for song ids: numeric ids compare numerically and sort
/// before non-numeric ones, which compare lexically.
pub(crate) fn song_id_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

#[cfg(test)]
pub(crate) fn toy_dataset(n: usize, d: usize) -> Dataset {
    let features = Array2::from_shape_fn((n, d), |(i, j)| (i * d + j) as f64 * 0.5);
    Dataset::new(
        (0..n).map(|i| format!("s{i}")).collect(),
        (0..d).map(|j| format!("f{j}")).collect(),
        features,
        Array1::from_shape_fn(n, |i| i as f64 / n as f64),
        Array1::from_shape_fn(n, |i| -(i as f64) / n as f64),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn rejects_duplicate_ids_and_non_finite_values() {
        let err = Dataset::new(
            vec!["a".into(), "a".into()],
            vec!["f".into()],
            array![[1.0], [2.0]],
            array![0.0, 0.0],
            array![0.0, 0.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateSongId(ref id) if id == "a"));

        let err = Dataset::new(
            vec!["a".into(), "b".into()],
            vec!["f".into()],
            array![[1.0], [f64::NAN]],
            array![0.0, 0.0],
            array![0.0, 0.0],
        )
        .unwrap_err();
        assert!(err.to_string().contains("`b`"));
    }

    #[test]
    fn split_ten_rows_seventy_thirty() {
        let ds = toy_dataset(10, 2);
        let (sel, val) = split(&ds, 0.7, 1).unwrap();
        assert_eq!((sel.n_samples(), val.n_samples()), (7, 3));
        let again = split(&ds, 0.7, 1).unwrap();
        assert_eq!(sel, again.0);
        assert_eq!(val, again.1);
    }

    #[test]
    fn split_full_deam_size() {
        assert_eq!(selection_size(1802, 0.7), 1261);
        let ds = toy_dataset(1802, 1);
        let (sel, val) = split(&ds, 0.7, 99).unwrap();
        assert_eq!((sel.n_samples(), val.n_samples()), (1261, 541));
    }

    #[test]
    fn split_rejects_empty_side() {
        let ds = toy_dataset(2, 1);
        assert!(split(&ds, 0.4, 0).is_err());
        assert!(split(&ds, 1.0, 0).is_err());
    }

    #[test]
    fn song_ids_sort_numerically() {
        let mut ids = vec!["10", "2", "b", "1", "a"];
        ids.sort_by(|a, b| song_id_order(a, b));
        assert_eq!(ids, ["1", "2", "10", "a", "b"]);
    }

    proptest! {
        #[test]
        fn split_is_an_exact_partition(n in 2usize..=200, tenths in prop::sample::select(vec![5usize, 7, 9]), seed in any::<u64>()) {
            let ratio = tenths as f64 / 10.0;
            let expected = tenths * n / 10;
            let ds = toy_dataset(n, 1);
            match split(&ds, ratio, seed) {
                Ok((sel, val)) => {
                    prop_assert_eq!(sel.n_samples(), expected);
                    prop_assert_eq!(val.n_samples(), n - expected);
                    let mut all: Vec<_> = sel.song_ids().iter().chain(val.song_ids()).cloned().collect();
                    let unique: HashSet<_> = all.iter().cloned().collect();
                    prop_assert_eq!(unique.len(), n);
                    all.sort();
                    let mut orig = ds.song_ids().to_vec();
                    orig.sort();
                    prop_assert_eq!(all, orig);
                }
                Err(_) => prop_assert!(expected == 0 || expected == n),
            }
        }
    }
}
