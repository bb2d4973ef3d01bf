//! Feature importance for SVR, used to rank features inside RFE.
//!
//! A kernel SVR has no per-feature weights, so the general signal is
//! permutation importance: the drop in held-out R^2 when one column of the
//! held-out rows is shuffled. Kernel values are recomputed incrementally:
//! permuting column j only changes the j-th term of each squared distance
//! (RBF) or dot product (linear).

use ndarray::{ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use super::{train_svr, Kernel, SvrModel, SvrParams};
use crate::error::{Error, Result};
use crate::evaluation::{kfold_partition, r2_score};
use crate::rng::{self, derive_seed};

/// Primal weights `w_j = sum_s beta_s x_sj` of a linear-kernel model.
pub fn linear_weights(model: &SvrModel) -> Result<Vec<f64>> {
    if model.params.kernel != Kernel::Linear {
        return Err(Error::InvalidArgument("primal weights need a linear kernel".into()));
    }
    let mut w = vec![0.0; model.n_features()];
    for (sv, b) in model.support_vectors.rows().into_iter().zip(&model.dual_coeffs) {
        for (wj, x) in w.iter_mut().zip(sv.iter()) {
            *wj += b * x;
        }
    }
    Ok(w)
}

/// Kernel "inner" quantity per (query row, support vector): squared
/// distance for RBF, dot product for linear.
fn inner_matrix(model: &SvrModel, x: ArrayView2<'_, f64>) -> Vec<f64> {
    let sv = &model.support_vectors;
    let mut out = Vec::with_capacity(x.nrows() * sv.nrows());
    for row in x.rows() {
        for s in sv.rows() {
            out.push(match model.params.kernel {
                Kernel::Rbf => row.iter().zip(s.iter()).map(|(a, b)| (a - b) * (a - b)).sum(),
                Kernel::Linear => row.dot(&s),
            });
        }
    }
    out
}

fn predict_from_inner(model: &SvrModel, inner: &[f64], m: usize) -> Vec<f64> {
    let s = model.dual_coeffs.len();
    let gamma = model.gamma();
    (0..m)
        .map(|r| {
            let row = &inner[r * s..(r + 1) * s];
            model
                .dual_coeffs
                .iter()
                .zip(row)
                .map(|(b, &q)| match model.params.kernel {
                    Kernel::Rbf => b * (-gamma * q).exp(),
                    Kernel::Linear => b * q,
                })
                .sum::<f64>()
                + model.bias
        })
        .collect()
}

/// Held-out R^2 drop per column for one fitted model.
pub(crate) fn permutation_drops(
    model: &SvrModel,
    x_test: ArrayView2<'_, f64>,
    y_test: ArrayView1<'_, f64>,
    seed: u64,
) -> Vec<f64> {
    let m = x_test.nrows();
    let y: Vec<f64> = y_test.to_vec();
    let inner = inner_matrix(model, x_test);
    let base = r2_score(&y, &predict_from_inner(model, &inner, m)).unwrap_or(0.0);
    let s = model.dual_coeffs.len();
    let mut scratch = vec![0.0; inner.len()];
    (0..x_test.ncols())
        .map(|j| {
            let col = x_test.column(j);
            let mut perm: Vec<usize> = (0..m).collect();
            rng::shuffle(&mut rng::rng_from_seed(derive_seed(seed, &[j as u64])), &mut perm);
            for r in 0..m {
                let (old, new) = (col[r], col[perm[r]]);
                for (k, sv) in model.support_vectors.column(j).iter().enumerate() {
                    let idx = r * s + k;
                    scratch[idx] = match model.params.kernel {
                        Kernel::Rbf => (inner[idx] - (old - sv) * (old - sv) + (new - sv) * (new - sv)).max(0.0),
                        Kernel::Linear => inner[idx] + (new - old) * sv,
                    };
                }
            }
            let permuted = r2_score(&y, &predict_from_inner(model, &scratch, m)).unwrap_or(0.0);
            base - permuted
        })
        .collect()
}

/// Mean decrease in held-out R^2 when each column is shuffled, over a
/// `folds`-fold partition of the rows. Folds run in parallel with
/// per-(fold, feature) seeds and are reduced in fold order.
pub fn svr_feature_importance(
    params: &SvrParams,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = x.ncols();
    if d == 0 {
        return Err(Error::InvalidArgument("no features to score".into()));
    }
    let plan = kfold_partition(x.nrows(), folds, derive_seed(seed, &[0]))?;
    let per_fold: Vec<Result<Vec<f64>>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (train, test) = plan.split_indices(f);
            let model = train_svr(x.select(Axis(0), &train).view(), y.select(Axis(0), &train).view(), params)?;
            Ok(permutation_drops(
                &model,
                x.select(Axis(0), &test).view(),
                y.select(Axis(0), &test).view(),
                derive_seed(seed, &[1, f as u64]),
            ))
        })
        .collect();
    let mut total = vec![0.0; d];
    for drops in per_fold {
        for (t, v) in total.iter_mut().zip(drops?) {
            *t += v;
        }
    }
    Ok(total.into_iter().map(|t| t / folds as f64).collect())
}
