//! Brute-force reference implementations shared by the integration and
//! acceptance tests. They avoid every shortcut the library takes: tree
//! splits are scored by recomputing both child squared errors from scratch,
//! and the SVR dual is minimised by enumerating a grid.

#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use mersel::forest::{Tree, TreeNode};
use mersel::rng::rng_from_seed;

/// Tie and stop tolerance relative to the node's squared error.
pub const TREE_TOLERANCE: f64 = 1e-10;

fn sse(values: &[f64]) -> f64 {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - m) * (v - m)).sum()
}

struct OracleSplit {
    feature: usize,
    threshold: f64,
}

/// Every (feature, threshold) candidate of a node with its child squared
/// error, in (feature, threshold) order.
fn candidates(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, rows: &[usize]) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x[[r, f]]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let mut t = (w[0] + w[1]) / 2.0;
            if t >= w[1] {
                t = w[0];
            }
            let left: Vec<f64> = rows.iter().filter(|&&r| x[[r, f]] <= t).map(|&r| y[r]).collect();
            let right: Vec<f64> = rows.iter().filter(|&&r| x[[r, f]] > t).map(|&r| y[r]).collect();
            out.push((f, t, sse(&left) + sse(&right)));
        }
    }
    out
}

fn best_split(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, rows: &[usize]) -> Option<OracleSplit> {
    let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    if rows.len() < 2 || ys.iter().all(|&v| v == ys[0]) {
        return None;
    }
    let node = sse(&ys);
    let cands = candidates(x, y, rows);
    let min = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    if !(node - min > TREE_TOLERANCE * node) {
        return None;
    }
    let &(feature, threshold, _) = cands.iter().find(|c| c.2 <= min + TREE_TOLERANCE * node)?;
    Some(OracleSplit { feature, threshold })
}

/// Walk `tree` against an exhaustive search, assuming it was grown on all
/// rows with every feature considered and no depth limit.
pub fn check_tree(tree: &Tree, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<(), String> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    check_node(tree, 0, x, y, &rows)
}

fn check_node(tree: &Tree, idx: usize, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, rows: &[usize]) -> Result<(), String> {
    let expected = best_split(x, y, rows);
    match (&tree.nodes()[idx], expected) {
        (TreeNode::Leaf { value, count }, None) => {
            let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
            if *value != mean || *count != rows.len() {
                return Err(format!("leaf {idx}: value {value} count {count}, oracle {mean} over {}", rows.len()));
            }
            Ok(())
        }
        (TreeNode::Split { feature, threshold, left, right, .. }, Some(s)) => {
            if *feature != s.feature || *threshold != s.threshold {
                return Err(format!(
                    "node {idx}: split ({feature}, {threshold}), oracle ({}, {})",
                    s.feature, s.threshold
                ));
            }
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[[i, s.feature]] <= s.threshold);
            check_node(tree, *left, x, y, &l)?;
            check_node(tree, *right, x, y, &r)
        }
        (node, expected) => Err(format!(
            "node {idx}: got {node:?}, oracle {}",
            match expected {
                Some(s) => format!("split ({}, {})", s.feature, s.threshold),
                None => "leaf".into(),
            }
        )),
    }
}

/// `1/2 b'Kb + eps * sum|b| - y'b`.
pub fn dual_value(k: &Array2<f64>, y: &[f64], beta: &[f64], epsilon: f64) -> f64 {
    let n = beta.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += beta[i] * k[[i, j]] * beta[j];
        }
    }
    0.5 * quad + epsilon * beta.iter().map(|b| b.abs()).sum::<f64>() - y.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
}

/// Minimum of the three-point SVR dual over the grid `beta_1, beta_2` in
/// steps of `C / 200`, with `beta_3 = -beta_1 - beta_2` kept in the box.
pub fn svr_grid_minimum(k: &Array2<f64>, y: &[f64], c: f64, epsilon: f64) -> f64 {
    assert_eq!(y.len(), 3, "the grid oracle handles three points");
    let steps = 200;
    let h = c / steps as f64;
    let mut best = f64::INFINITY;
    for i in -steps..=steps {
        for j in -steps..=steps {
            let (b1, b2) = (i as f64 * h, j as f64 * h);
            let b3 = -b1 - b2;
            if b3.abs() > c + 1e-12 {
                continue;
            }
            best = best.min(dual_value(k, y, &[b1, b2, b3], epsilon));
        }
    }
    best
}

/// Tiny tree-fitting instance: N in 1..=8 rows, D in 1..=3 columns, values
/// on a coarse grid so ties between rows and between candidate splits are
/// common.
pub fn tree_instance(seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(1..=8);
    let d = rng.random_range(1..=3);
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(0..5) as f64 / 4.0);
    let y = Array1::from_shape_fn(n, |_| rng.random_range(-4..=4) as f64 / 2.0);
    (x, y)
}

/// Three one-dimensional points with targets in [-1, 1].
pub fn svr_instance(seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = rng_from_seed(seed);
    let x = Array2::from_shape_fn((3, 1), |_| rng.random_range(-1.0..1.0));
    let y = Array1::from_shape_fn(3, |_| rng.random_range(-1.0..1.0));
    (x, y)
}

/// Prediction for `query` of the tree the exhaustive search would grow,
/// found by re-running the search along the query's path.
pub fn oracle_predict(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, query: ArrayView1<'_, f64>) -> f64 {
    let mut rows: Vec<usize> = (0..x.nrows()).collect();
    while let Some(s) = best_split(x, y, &rows) {
        let left = query[s.feature] <= s.threshold;
        rows.retain(|&r| (x[[r, s.feature]] <= s.threshold) == left);
    }
    rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64
}
