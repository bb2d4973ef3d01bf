use std::collections::BTreeMap;

use ndarray::{Array1, Array2};

use super::*;
use crate::dataset::{generate_synthetic, SyntheticSpec};
use crate::forest::ForestParams;
use crate::selection::{select_features, EstimatorSpec};

fn small_forest() -> ForestParams {
    ForestParams { n_trees: 10, ..ForestParams::default() }
}

#[test]
fn learnable_data_scores_near_one() {
    let n = 60;
    let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64 / n as f64);
    let y: Array1<f64> = x.column(0).to_owned();
    let est = EstimatorSpec::forest(small_forest());
    let report = cross_validate(x.view(), y.view(), &est, 10, 3).unwrap();
    assert_eq!(report.fold_scores.len(), 10);
    assert!(report.mean_score > 0.95, "{}", report.mean_score);
}

#[test]
fn constant_target_scores_zero_with_flag() {
    let x = Array2::from_shape_fn((20, 2), |(i, j)| (i * (j + 1)) as f64);
    let y = Array1::from_elem(20, 0.3);
    let report = cross_validate(x.view(), y.view(), &EstimatorSpec::forest(small_forest()), 5, 0).unwrap();
    assert!(report.fold_scores.iter().all(|&s| s == 0.0));
    assert_eq!(report.zero_variance_folds, vec![0, 1, 2, 3, 4]);
}

#[test]
fn summary_is_recomputable_from_folds() {
    let (ds, _) = generate_synthetic(
        &SyntheticSpec::new(50, 2, 2, 0.1),
        4,
    )
    .unwrap();
    let est = EstimatorSpec::svr(Default::default());
    let r = cross_validate(ds.features(), ds.valence(), &est, 5, 9).unwrap();
    let m = r.fold_scores.iter().sum::<f64>() / 5.0;
    let s = (r.fold_scores.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 5.0).sqrt();
    assert!((r.mean_score - m).abs() < 1e-12);
    assert!((r.std_score - s).abs() < 1e-12);
    let again = cross_validate(ds.features(), ds.valence(), &est, 5, 9).unwrap();
    assert_eq!(r.fold_scores, again.fold_scores);
    assert_eq!(r.cv_loss, again.cv_loss);
}

#[test]
fn cv_loss_weights_folds_by_size() {
    let (ds, _) = generate_synthetic(
        &SyntheticSpec::new(23, 1, 1, 0.1),
        1,
    )
    .unwrap();
    let est = EstimatorSpec::forest(small_forest());
    let r = cross_validate(ds.features(), ds.arousal(), &est, 10, 2).unwrap();
    let plan = kfold_partition(23, 10, 2).unwrap();
    let weighted: f64 = r.fold_losses.iter().zip(plan.fold_sizes()).map(|(l, s)| l * s as f64).sum::<f64>() / 23.0;
    assert!((r.cv_loss - weighted).abs() < 1e-12);
}

#[test]
fn benchmark_has_eight_rows_and_shared_plans() {
    let (ds, _) = generate_synthetic(
        &SyntheticSpec::new(40, 2, 3, 0.1),
        5,
    )
    .unwrap();
    let config = BenchmarkConfig { folds: 4, seed: 11, forest: small_forest(), ..BenchmarkConfig::default() };
    let mut artifacts = BTreeMap::new();
    for &(model, target) in &config.cells {
        let est = match model {
            EstimatorKind::Svr => EstimatorSpec::svr(config.svr.clone()),
            EstimatorKind::Forest => EstimatorSpec::forest(config.forest.clone()),
        };
        let sfs = select_features(&ds, target, &est, 4, 2, 3).unwrap();
        artifacts.insert((model, target), sfs);
    }
    let report = benchmark(&ds, &artifacts, &config).unwrap();
    assert_eq!(report.rows.len(), 8);
    for &(model, target) in &config.cells {
        let c = report.row(model, target, FeatureSetKind::Complete).unwrap();
        let s = report.row(model, target, FeatureSetKind::Selected).unwrap();
        assert_eq!(c.cv.plan_seed, s.cv.plan_seed);
        assert_eq!(c.n_features, 5);
        assert_eq!(s.n_features, artifacts[&(model, target)].chosen_size);
        let d = report.deltas.iter().find(|d| d.model == model && d.target == target).unwrap();
        assert_eq!(d.score_delta, s.score - c.score);
    }

    let md = to_markdown(&report);
    assert!(md.starts_with("| Model | Type | Feature Set | Use Features | Score | STD |"));
    assert_eq!(md.lines().count(), 10);
    let csv = fold_scores_csv(&report);
    assert_eq!(csv.lines().count(), 1 + 8 * 4);
    assert!(score_bars_svg(&report).contains("<svg"));
    assert!(fold_scores_svg(&report).matches("<polyline").count() == 8);

    artifacts.remove(&(EstimatorKind::Svr, Target::Valence));
    assert!(benchmark(&ds, &artifacts, &config).is_err());
}

#[test]
fn markdown_rounds_to_three_decimals() {
    let report = BenchmarkReport {
        config: BenchmarkConfig::default(),
        n_samples: 0,
        rows: vec![BenchmarkRow {
            model: EstimatorKind::Svr,
            target: Target::Arousal,
            feature_set: FeatureSetKind::Selected,
            n_features: 74,
            score: 0.64512,
            std: 0.11449,
            cv: CvReport {
                k: 1,
                plan_seed: 0,
                fold_scores: vec![],
                mean_score: 0.0,
                std_score: 0.0,
                fold_losses: vec![],
                cv_loss: 0.0,
                zero_variance_folds: vec![],
                fold_elapsed_secs: vec![],
            },
        }],
        deltas: vec![],
        reductions: vec![],
    };
    assert!(to_markdown(&report).contains("| SVR | Arousal | SFS | 74 | 0.645 | 0.114 |"));
}
