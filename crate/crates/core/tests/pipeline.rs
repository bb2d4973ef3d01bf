//! Synthetic data through selection and the benchmark, using only the
//! public library surface.

use std::collections::BTreeMap;

use mersel::dataset::{generate_synthetic, split, SyntheticSpec, Target};
use mersel::evaluation::{benchmark, fold_std, mean, BenchmarkConfig, FeatureSetKind};
use mersel::forest::{ForestImportance, ForestParams};
use mersel::selection::{apply_selection, select_features, EstimatorKind, EstimatorSpec, SvrImportance};
use mersel::svr::SvrParams;

fn spec(kind: EstimatorKind, forest: &ForestParams) -> EstimatorSpec {
    match kind {
        EstimatorKind::Svr => EstimatorSpec::Svr {
            params: SvrParams::default(),
            importance: SvrImportance::default(),
        },
        EstimatorKind::Forest => EstimatorSpec::Forest {
            params: forest.clone(),
            importance: ForestImportance::Impurity,
        },
    }
}

#[test]
fn select_then_benchmark_on_synthetic_data() {
    let (ds, informative) = generate_synthetic(&SyntheticSpec::new(90, 3, 5, 0.1), 4).unwrap();
    let (ds, _) = ds.scale_targets_to_unit();
    let (train, _) = split(&ds, 0.7, 4).unwrap();
    let forest = ForestParams { n_trees: 15, ..ForestParams::default() };

    let mut selections = BTreeMap::new();
    for kind in EstimatorKind::ALL {
        for target in Target::ALL {
            let sfs = select_features(&train, target, &spec(kind, &forest), 3, 1, 4).unwrap();
            assert_eq!(sfs.n_features_total, 8);
            assert!(sfs.chosen_size >= 1 && sfs.chosen_size <= 8);
            let reduced = apply_selection(&ds, &sfs).unwrap();
            assert_eq!(reduced.n_features(), sfs.chosen_size);
            selections.insert((kind, target), sfs);
        }
    }
    // The strongest informative column survives the forest's valence run.
    let fv = &selections[&(EstimatorKind::Forest, Target::Valence)];
    assert!(fv.selected_indices.iter().any(|j| informative.contains(j)));

    let config = BenchmarkConfig { folds: 5, seed: 4, forest, ..BenchmarkConfig::default() };
    let report = benchmark(&ds, &selections, &config).unwrap();
    assert_eq!(report.rows.len(), 8);
    for row in &report.rows {
        assert_eq!(row.cv.fold_scores.len(), 5);
        assert_eq!(row.score, mean(&row.cv.fold_scores));
        assert_eq!(row.std, fold_std(&row.cv.fold_scores));
        let expected = match row.feature_set {
            FeatureSetKind::Complete => 8,
            FeatureSetKind::Selected => selections[&(row.model, row.target)].chosen_size,
        };
        assert_eq!(row.n_features, expected);
    }
    // Reproducible from the same inputs, fold timings aside.
    let rerun = benchmark(&ds, &selections, &config).unwrap();
    assert_eq!(rerun.without_timings(), report.without_timings());
}
