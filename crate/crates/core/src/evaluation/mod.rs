//! Metrics, k-fold cross-validation and the complete-vs-selected feature
//! set benchmark.

mod kfold;
mod metrics;
mod render;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use ndarray::{ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Target};
use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::rng::derive_seed;
use crate::selection::{apply_selection, compute_reduction_rate, EstimatorKind, EstimatorSpec, SelectedFeatureSet};
use crate::svr::SvrParams;

pub use kfold::{kfold_partition, FoldPlan};
pub use metrics::{fold_std, mae, mean, mean_squared_error, r2_detail, r2_score, R2};
pub use render::{fold_scores_csv, fold_scores_svg, score_bars_svg, to_markdown};

/// Per-fold results of one cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub plan_seed: u64,
    /// Held-out R^2 per fold.
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
    /// Population standard deviation of `fold_scores`.
    pub std_score: f64,
    /// Held-out mean squared error per fold.
    pub fold_losses: Vec<f64>,
    /// Squared error averaged over every row's out-of-fold prediction.
    pub cv_loss: f64,
    /// Folds whose held-out targets were constant (R^2 set to 0).
    pub zero_variance_folds: Vec<usize>,
    /// Wall-clock seconds per fold; the only non-reproducible field.
    pub fold_elapsed_secs: Vec<f64>,
}

struct FoldOutcome {
    r2: R2,
    mse: f64,
    sse: f64,
    elapsed: f64,
}

/// Train on the complement of each fold and score on the fold. Fold `i`
/// fits with seed `derive_seed(seed, [i])`; folds run in parallel and are
/// collected in fold order.
pub fn cross_validate_with_plan(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    estimator: &EstimatorSpec,
    plan: &FoldPlan,
    seed: u64,
) -> Result<CvReport> {
    if plan.n() != x.nrows() || y.len() != x.nrows() {
        return Err(Error::DimensionMismatch { expected: plan.n(), got: x.nrows() });
    }
    let outcomes: Vec<Result<FoldOutcome>> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let start = Instant::now();
            let (train, test) = plan.split_indices(fold);
            let fitted = estimator
                .fit(x.select(Axis(0), &train).view(), y.select(Axis(0), &train).view(), derive_seed(seed, &[fold as u64]))
                .map_err(|e| e.context(format!("cross-validation fold {fold}")))?;
            let pred = fitted.predict(x.select(Axis(0), &test).view())?.to_vec();
            let truth = y.select(Axis(0), &test).to_vec();
            let r2 = r2_detail(&truth, &pred)?;
            let mse = mean_squared_error(&truth, &pred)?;
            Ok(FoldOutcome { r2, mse, sse: mse * truth.len() as f64, elapsed: start.elapsed().as_secs_f64() })
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let fold_scores: Vec<f64> = outcomes.iter().map(|o| o.r2.value).collect();
    Ok(CvReport {
        k: plan.k,
        plan_seed: plan.seed,
        mean_score: mean(&fold_scores),
        std_score: fold_std(&fold_scores),
        fold_losses: outcomes.iter().map(|o| o.mse).collect(),
        cv_loss: outcomes.iter().map(|o| o.sse).sum::<f64>() / plan.n() as f64,
        zero_variance_folds: outcomes.iter().enumerate().filter(|(_, o)| o.r2.zero_variance).map(|(i, _)| i).collect(),
        fold_elapsed_secs: outcomes.iter().map(|o| o.elapsed).collect(),
        fold_scores,
    })
}

/// [`cross_validate_with_plan`] with a fold plan drawn from `seed`.
pub fn cross_validate(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    estimator: &EstimatorSpec,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    let plan = kfold_partition(x.nrows(), k, seed)?;
    cross_validate_with_plan(x, y, estimator, &plan, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSetKind {
    #[serde(rename = "CFS")]
    Complete,
    #[serde(rename = "SFS")]
    Selected,
}

impl fmt::Display for FeatureSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSetKind::Complete => "CFS",
            FeatureSetKind::Selected => "SFS",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub folds: usize,
    pub seed: u64,
    /// Hyperparameters shared by the complete and selected runs.
    pub svr: SvrParams,
    pub forest: ForestParams,
    pub cells: Vec<(EstimatorKind, Target)>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            folds: 10,
            seed: 0,
            svr: SvrParams::default(),
            forest: ForestParams::default(),
            cells: EstimatorKind::ALL
                .iter()
                .flat_map(|&m| Target::ALL.iter().map(move |&t| (m, t)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub model: EstimatorKind,
    pub target: Target,
    pub feature_set: FeatureSetKind,
    pub n_features: usize,
    pub score: f64,
    pub std: f64,
    pub cv: CvReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkDelta {
    pub model: EstimatorKind,
    pub target: Target,
    /// Selected minus complete mean R^2.
    pub score_delta: f64,
    /// Selected minus complete fold STD.
    pub std_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRate {
    pub model: EstimatorKind,
    pub target: Target,
    pub n_original: usize,
    pub n_selected: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub n_samples: usize,
    pub rows: Vec<BenchmarkRow>,
    pub deltas: Vec<BenchmarkDelta>,
    pub reductions: Vec<ReductionRate>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn row(&self, model: EstimatorKind, target: Target, set: FeatureSetKind) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.model == model && r.target == target && r.feature_set == set)
    }

    /// Copy with every fold timing zeroed, for comparing reruns.
    pub fn without_timings(&self) -> BenchmarkReport {
        let mut out = self.clone();
        for row in &mut out.rows {
            row.cv.fold_elapsed_secs.iter_mut().for_each(|t| *t = 0.0);
        }
        out
    }
}

/// Cross-validate every requested (model, target) cell on the complete
/// feature set and on its selected subset. Both runs of a cell share one
/// fold plan and the same per-fold seeds.
pub fn benchmark(
    cfs: &Dataset,
    artifacts: &BTreeMap<(EstimatorKind, Target), SelectedFeatureSet>,
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    let mut rows = Vec::new();
    let mut deltas = Vec::new();
    let mut reductions = Vec::new();
    let plan = kfold_partition(cfs.n_samples(), config.folds, derive_seed(config.seed, &[0]))?;

    for &(model, target) in &config.cells {
        let sfs = artifacts
            .get(&(model, target))
            .ok_or_else(|| Error::InvalidArgument(format!("no selected feature set for {model}/{target}")))?;
        let selected = apply_selection(cfs, sfs).map_err(|e| e.context(format!("{model}/{target} artifact")))?;
        let estimator = match model {
            EstimatorKind::Svr => EstimatorSpec::svr(config.svr.clone()),
            EstimatorKind::Forest => EstimatorSpec::forest(config.forest.clone()),
        };
        let fit_seed = derive_seed(config.seed, &[1]);
        let mut pair = Vec::with_capacity(2);
        for (set, ds) in [(FeatureSetKind::Complete, cfs), (FeatureSetKind::Selected, &selected)] {
            log::info!("benchmark {model}/{target}/{set}: {} features", ds.n_features());
            let cv = cross_validate_with_plan(ds.features(), ds.target(target), &estimator, &plan, fit_seed)
                .map_err(|e| e.context(format!("{model}/{target}/{set}")))?;
            pair.push((cv.mean_score, cv.std_score));
            rows.push(BenchmarkRow {
                model,
                target,
                feature_set: set,
                n_features: ds.n_features(),
                score: cv.mean_score,
                std: cv.std_score,
                cv,
            });
        }
        deltas.push(BenchmarkDelta {
            model,
            target,
            score_delta: pair[1].0 - pair[0].0,
            std_delta: pair[1].1 - pair[0].1,
        });
        reductions.push(ReductionRate {
            model,
            target,
            n_original: cfs.n_features(),
            n_selected: selected.n_features(),
            rate: compute_reduction_rate(cfs.n_features(), selected.n_features())?,
        });
    }
    Ok(BenchmarkReport {
        config: config.clone(),
        n_samples: cfs.n_samples(),
        rows,
        deltas,
        reductions,
    })
}

#[cfg(test)]
mod tests;
