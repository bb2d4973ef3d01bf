//! Recursive feature elimination and its cross-validated variant.
//!
//! RFE repeatedly fits the estimator on the surviving columns, asks it for
//! per-feature importance and drops the `step` least important columns
//! (ties: the higher column index goes first) until `n_target` remain.
//!
//! RFECV runs a fresh RFE down to one feature inside every training fold
//! and scores each visited subset size by R^2 on the held-out fold, so
//! held-out rows never influence which features are removed. The chosen
//! size maximises the mean fold score (ties: smaller size) and the final
//! subset comes from one RFE on all rows down to that size.

mod estimator;

use std::collections::BTreeMap;

use ndarray::{ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Target};
use crate::error::{Error, Result};
use crate::evaluation::{kfold_partition, mean, r2_score};
use crate::rng::derive_seed;

pub use estimator::{EstimatorKind, EstimatorSpec, FittedModel, SvrImportance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    pub feature: usize,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    /// Rank per column: 1 for survivors, then 2, 3, ... in reverse order of
    /// elimination (the last column removed has rank 2).
    pub rank: Vec<usize>,
    /// Removals in the order they happened.
    pub elimination_trace: Vec<Elimination>,
    /// Surviving columns, ascending.
    pub survivors: Vec<usize>,
}

/// Columns to remove this round: the `count` lowest importances, higher
/// index first on ties.
fn least_important(survivors: &[usize], importance: &[f64], count: usize) -> Vec<(usize, f64)> {
    let mut order: Vec<(usize, f64)> = survivors.iter().copied().zip(importance.iter().copied()).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
    order.truncate(count);
    order
}

/// RFE core. `visit` sees every subset size the elimination passes
/// through (including the final one when `fit_final` is set) together with
/// the model fitted on it.
fn rfe_path<F>(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    estimator: &EstimatorSpec,
    n_target: usize,
    step: usize,
    seed: u64,
    fit_final: bool,
    mut visit: F,
) -> Result<FeatureRanking>
where
    F: FnMut(&[usize], &FittedModel) -> Result<()>,
{
    let d = x.ncols();
    if n_target < 1 || n_target > d {
        return Err(Error::InvalidArgument(format!("RFE target {n_target} not in 1..={d}")));
    }
    if step < 1 {
        return Err(Error::InvalidArgument("RFE step must be >= 1".into()));
    }
    let mut survivors: Vec<usize> = (0..d).collect();
    let mut trace = Vec::with_capacity(d - n_target);

    while survivors.len() > n_target || fit_final {
        let round_seed = derive_seed(seed, &[survivors.len() as u64]);
        let context = || format!("fitting on {} surviving features {:?}", survivors.len(), abbreviated(&survivors));
        let xs = x.select(Axis(1), &survivors);
        let fitted = estimator.fit(xs.view(), y, round_seed).map_err(|e| e.context(context()))?;
        visit(&survivors, &fitted)?;
        if survivors.len() == n_target {
            break;
        }
        let importance = estimator
            .importance(&fitted, xs.view(), y, derive_seed(round_seed, &[1]))
            .map_err(|e| e.context(context()))?;
        let remove = least_important(&survivors, &importance, step.min(survivors.len() - n_target));
        for &(feature, importance) in &remove {
            trace.push(Elimination { feature, importance });
        }
        survivors.retain(|f| !remove.iter().any(|r| r.0 == *f));
    }

    let mut rank = vec![1; d];
    let t = trace.len();
    for (p, e) in trace.iter().enumerate() {
        rank[e.feature] = t - p + 1;
    }
    Ok(FeatureRanking { rank, elimination_trace: trace, survivors })
}

fn abbreviated(v: &[usize]) -> String {
    if v.len() <= 8 {
        format!("{v:?}")
    } else {
        format!("{:?}..", &v[..8])
    }
}

pub fn rfe(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    estimator: &EstimatorSpec,
    n_target: usize,
    step: usize,
    seed: u64,
) -> Result<FeatureRanking> {
    estimator.validate()?;
    rfe_path(x, y, estimator, n_target, step, seed, false, |_, _| Ok(()))
}

/// Held-out scores for one subset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeScore {
    pub mean: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfecvResult {
    pub scores_by_size: BTreeMap<usize, SizeScore>,
    pub chosen_size: usize,
    /// Selected columns, ascending.
    pub selected: Vec<usize>,
    /// Ranking from the final all-rows RFE.
    pub ranking: FeatureRanking,
}

/// Argmax of the mean score; the smaller size wins ties.
pub fn choose_size(scores_by_size: &BTreeMap<usize, SizeScore>) -> Option<usize> {
    scores_by_size
        .iter()
        .fold(None, |best: Option<(usize, f64)>, (&size, s)| match best {
            Some((_, m)) if s.mean <= m => best,
            _ => Some((size, s.mean)),
        })
        .map(|(size, _)| size)
}

pub fn rfecv(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    estimator: &EstimatorSpec,
    k: usize,
    step: usize,
    seed: u64,
) -> Result<RfecvResult> {
    estimator.validate()?;
    let n = x.nrows();
    if k < 2 || n < k {
        return Err(Error::InvalidArgument(format!("RFECV needs 2 <= k <= N, got k = {k}, N = {n}")));
    }
    if n / k < 2 {
        return Err(Error::InvalidArgument(format!(
            "{n} rows in {k} folds leaves a fold with fewer than 2 samples"
        )));
    }
    let plan = kfold_partition(n, k, derive_seed(seed, &[0]))?;

    let per_fold: Vec<Result<Vec<(usize, f64)>>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (train, test) = plan.split_indices(fold);
            let (x_train, y_train) = (x.select(Axis(0), &train), y.select(Axis(0), &train));
            let (x_test, y_test) = (x.select(Axis(0), &test), y.select(Axis(0), &test).to_vec());
            let mut scores = Vec::new();
            rfe_path(x_train.view(), y_train.view(), estimator, 1, step, derive_seed(seed, &[1, fold as u64]), true, |survivors, fitted| {
                let pred = fitted.predict(x_test.select(Axis(1), survivors).view())?;
                scores.push((survivors.len(), r2_score(&y_test, pred.as_slice().expect("contiguous"))?));
                Ok(())
            })
            .map_err(|e| e.context(format!("RFECV fold {fold}")))?;
            Ok(scores)
        })
        .collect();

    let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for fold_scores in per_fold {
        for (size, score) in fold_scores? {
            by_size.entry(size).or_default().push(score);
        }
    }
    let scores_by_size: BTreeMap<usize, SizeScore> = by_size
        .into_iter()
        .map(|(size, fold_scores)| (size, SizeScore { mean: mean(&fold_scores), fold_scores }))
        .collect();
    let chosen_size = choose_size(&scores_by_size).expect("at least one size visited");
    let ranking = rfe_path(x, y, estimator, chosen_size, step, derive_seed(seed, &[2]), false, |_, _| Ok(()))?;
    Ok(RfecvResult {
        scores_by_size,
        chosen_size,
        selected: ranking.survivors.clone(),
        ranking,
    })
}

/// The selected-feature artifact written by feature selection and read by
/// the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeatureSet {
    pub selected_indices: Vec<usize>,
    pub selected_names: Vec<String>,
    pub chosen_size: usize,
    /// Feature count of the dataset selection ran on.
    pub n_features_total: usize,
    pub scores_by_size: BTreeMap<usize, SizeScore>,
    pub ranking: FeatureRanking,
    pub estimator: EstimatorSpec,
    pub target: Target,
    pub folds: usize,
    pub step: usize,
    pub master_seed: u64,
}

impl SelectedFeatureSet {
    pub fn reduction_rate(&self) -> Result<f64> {
        compute_reduction_rate(self.n_features_total, self.chosen_size)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sfs: SelectedFeatureSet = serde_json::from_str(text)?;
        if sfs.selected_indices.len() != sfs.chosen_size || sfs.selected_names.len() != sfs.chosen_size {
            return Err(Error::InvalidData("selected feature set: chosen_size disagrees with the index list".into()));
        }
        Ok(sfs)
    }
}

/// RFECV on one target of a dataset, packaged as an artifact.
pub fn select_features(
    dataset: &Dataset,
    target: Target,
    estimator: &EstimatorSpec,
    k: usize,
    step: usize,
    seed: u64,
) -> Result<SelectedFeatureSet> {
    let result = rfecv(dataset.features(), dataset.target(target), estimator, k, step, seed)?;
    Ok(SelectedFeatureSet {
        selected_names: result.selected.iter().map(|&j| dataset.feature_names()[j].clone()).collect(),
        selected_indices: result.selected,
        chosen_size: result.chosen_size,
        n_features_total: dataset.n_features(),
        scores_by_size: result.scores_by_size,
        ranking: result.ranking,
        estimator: estimator.clone(),
        target,
        folds: k,
        step,
        master_seed: seed,
    })
}

/// Column subset of `dataset` named by `sfs`, checking that indices and
/// names agree so an artifact is never applied to the wrong dataset.
pub fn apply_selection(dataset: &Dataset, sfs: &SelectedFeatureSet) -> Result<Dataset> {
    let names = dataset.feature_names();
    if sfs.selected_indices.len() != sfs.selected_names.len() {
        return Err(Error::InvalidData("selected indices and names differ in length".into()));
    }
    for (&j, name) in sfs.selected_indices.iter().zip(&sfs.selected_names) {
        match names.get(j) {
            Some(actual) if actual == name => {}
            Some(actual) => {
                return Err(Error::InvalidData(format!(
                    "selected feature {j} is `{name}` but the dataset has `{actual}` there"
                )))
            }
            None => {
                return Err(Error::InvalidData(format!(
                    "selected feature {j} outside the dataset's {} features",
                    names.len()
                )))
            }
        }
    }
    Ok(dataset.select_columns(&sfs.selected_indices))
}

/// Fraction of features removed: `(d_original - d_selected) / d_original`.
pub fn compute_reduction_rate(d_original: usize, d_selected: usize) -> Result<f64> {
    if d_selected == 0 || d_selected > d_original {
        return Err(Error::InvalidArgument(format!(
            "reduction from {d_original} to {d_selected} features is not a selection"
        )));
    }
    Ok((d_original - d_selected) as f64 / d_original as f64)
}
