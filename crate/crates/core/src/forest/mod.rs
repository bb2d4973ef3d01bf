//! Random forest regression: bagged CART trees whose predictions are
//! averaged.

mod importance;
mod tree;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, derive_seed};

pub use importance::{forest_feature_importance, oob_mae_importance, ForestImportance, OobMaeImportance};
pub use tree::{fit_tree, predict_tree, FlatTree, Tree, TreeNode, TIE_TOLERANCE};

/// Split criterion. Only squared error is supported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    SquaredError,
}

/// Number of features examined at each split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaxFeatures {
    Count(usize),
    #[default]
    #[serde(with = "all_tag")]
    All,
}

mod all_tag {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("all")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "all" {
            Ok(())
        } else {
            Err(de::Error::custom(format!("expected \"all\" or a count, got {s:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features_per_split: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            criterion: Criterion::SquaredError,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: MaxFeatures::All,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidArgument("forest needs at least one tree".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidArgument(format!(
                "min_samples_split must be >= 2, got {}",
                self.min_samples_split
            )));
        }
        if self.features_per_split == MaxFeatures::Count(0) {
            return Err(Error::InvalidArgument("features_per_split must be >= 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_training_data(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("cannot fit on zero samples".into()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in training data".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub seed: u64,
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<Tree>,
    /// Training rows absent from each tree's bootstrap sample (empty when
    /// bootstrapping is off).
    pub oob_indices: Vec<Vec<usize>>,
    pub n_features: usize,
}

impl ForestModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Per-tree predictions for one row, in tree order.
    pub fn tree_predictions(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        self.trees.iter().map(|t| predict_tree(t, x)).collect()
    }
}

/// Train `n_trees` trees. Tree `i` uses seed `derive_seed(seed, [i])` both
/// for its bootstrap draw and for any per-split feature sampling, so the
/// forest is identical however the trees are scheduled.
pub fn train_forest(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    params.validate()?;
    check_training_data(x, y)?;
    let n = x.nrows();
    let pre = tree::Presorted::new(x);
    let y: Vec<f64> = y.to_vec();
    let tree_seeds: Vec<u64> = (0..params.n_trees as u64).map(|i| derive_seed(seed, &[i])).collect();

    let grown: Vec<(Tree, Vec<usize>)> = tree_seeds
        .par_iter()
        .map(|&tree_seed| {
            if params.bootstrap {
                let mut r = rng::rng_from_seed(tree_seed);
                let rows: Vec<usize> = (0..n).map(|_| rng::bounded(&mut r, n)).collect();
                let mut in_bag = vec![false; n];
                for &i in &rows {
                    in_bag[i] = true;
                }
                let oob = (0..n).filter(|&i| !in_bag[i]).collect();
                let split_seed = derive_seed(tree_seed, &[1]);
                (tree::grow(&pre, &y, &rows, params, split_seed), oob)
            } else {
                let rows: Vec<usize> = (0..n).collect();
                (tree::grow(&pre, &y, &rows, params, derive_seed(tree_seed, &[1])), Vec::new())
            }
        })
        .collect();
    let (trees, oob_indices) = grown.into_iter().unzip();
    Ok(ForestModel {
        params: params.clone(),
        seed,
        tree_seeds,
        trees,
        oob_indices,
        n_features: x.ncols(),
    })
}

/// Mean of the tree predictions, summed in tree order.
pub fn predict_forest(model: &ForestModel, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if x.ncols() != model.n_features {
        return Err(Error::DimensionMismatch { expected: model.n_features, got: x.ncols() });
    }
    let n_trees = model.trees.len() as f64;
    Ok(x.rows()
        .into_iter()
        .map(|row| model.trees.iter().map(|t| t.predict_unchecked(|j| row[j])).sum::<f64>() / n_trees)
        .collect())
}
