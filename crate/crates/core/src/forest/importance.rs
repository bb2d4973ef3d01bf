use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ForestModel;
use crate::error::{Error, Result};
use crate::evaluation::mae;
use crate::rng::{self, derive_seed};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestImportance {
    /// Squared-error reduction per feature, normalised per tree, averaged
    /// over trees and normalised to sum 1.
    #[default]
    Impurity,
    /// Mean increase in out-of-bag mean absolute error when the feature is
    /// permuted among each tree's out-of-bag rows.
    OobMae,
}

/// Out-of-bag MAE breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobMaeImportance {
    /// `permuted_mae[j] - baseline_mae`, per feature.
    pub importances: Vec<f64>,
    /// Mean over trees of the tree's OOB mean absolute error.
    pub baseline_mae: f64,
    pub permuted_mae: Vec<f64>,
    /// Mean absolute deviation of the targets from their mean: the error of
    /// a constant predictor, for scale.
    pub label_mae: f64,
    /// Trees that had at least one out-of-bag row.
    pub trees_used: usize,
}

fn impurity_importance(model: &ForestModel) -> Vec<f64> {
    let d = model.n_features;
    let mut total = vec![0.0; d];
    for tree in &model.trees {
        let gains = tree.gain_by_feature();
        let sum: f64 = gains.iter().sum();
        if sum > 0.0 {
            for (t, g) in total.iter_mut().zip(gains) {
                *t += g / sum;
            }
        }
    }
    let sum: f64 = total.iter().sum();
    if sum > 0.0 {
        total.iter_mut().for_each(|t| *t /= sum);
    }
    total
}

/// Permutation importance on out-of-bag rows. `x` and `y` must be the
/// training data the forest was fitted on.
pub fn oob_mae_importance(model: &ForestModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<OobMaeImportance> {
    if !model.params.bootstrap {
        return Err(Error::InvalidArgument("out-of-bag importance needs bootstrap = true".into()));
    }
    if x.ncols() != model.n_features {
        return Err(Error::DimensionMismatch { expected: model.n_features, got: x.ncols() });
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    let n = x.nrows();
    if model.oob_indices.iter().flatten().any(|&i| i >= n) {
        return Err(Error::InvalidArgument("out-of-bag rows exceed the given data; pass the training set".into()));
    }
    let d = model.n_features;

    // (baseline, permuted per feature) for each tree with OOB rows
    let per_tree: Vec<Option<(f64, Vec<f64>)>> = model
        .trees
        .par_iter()
        .zip(&model.oob_indices)
        .enumerate()
        .map(|(t, (tree, oob))| {
            if oob.is_empty() {
                return None;
            }
            let m = oob.len() as f64;
            let base = oob.iter().map(|&i| (tree.predict_unchecked(|j| x[[i, j]]) - y[i]).abs()).sum::<f64>() / m;
            let permuted = (0..d)
                .map(|f| {
                    let mut perm = oob.clone();
                    rng::shuffle(&mut rng::rng_from_seed(derive_seed(model.seed, &[0x00b, t as u64, f as u64])), &mut perm);
                    oob.iter()
                        .zip(&perm)
                        .map(|(&i, &donor)| {
                            let p = tree.predict_unchecked(|j| if j == f { x[[donor, j]] } else { x[[i, j]] });
                            (p - y[i]).abs()
                        })
                        .sum::<f64>()
                        / m
                })
                .collect();
            Some((base, permuted))
        })
        .collect();

    let used: Vec<(f64, Vec<f64>)> = per_tree.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::InvalidData("no tree has out-of-bag rows".into()));
    }
    let k = used.len() as f64;
    let baseline_mae = used.iter().map(|(b, _)| b).sum::<f64>() / k;
    let mut permuted_mae = vec![0.0; d];
    for (_, p) in &used {
        for (acc, v) in permuted_mae.iter_mut().zip(p) {
            *acc += v;
        }
    }
    permuted_mae.iter_mut().for_each(|v| *v /= k);
    let y_mean = y.sum() / n as f64;
    Ok(OobMaeImportance {
        importances: permuted_mae.iter().map(|p| p - baseline_mae).collect(),
        baseline_mae,
        permuted_mae,
        label_mae: mae(&y.to_vec(), y_mean),
        trees_used: used.len(),
    })
}

pub fn forest_feature_importance(
    model: &ForestModel,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    mode: ForestImportance,
) -> Result<Vec<f64>> {
    match mode {
        ForestImportance::Impurity => Ok(impurity_importance(model)),
        ForestImportance::OobMae => Ok(oob_mae_importance(model, x, y)?.importances),
    }
}
