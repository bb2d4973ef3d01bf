//! Epsilon-insensitive support vector regression.
//!
//! The model is the kernel expansion `f(x) = sum_s beta_s k(x_s, x) + b`
//! with `beta_s = alpha_s - alpha_s*` from the dual of the soft-margin
//! regression problem. The feature map is never materialised.
//!
//! Inputs are expected to be normalised by the caller; see
//! [`crate::dataset::zscore_normalize`].

mod importance;
mod solver;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::ColumnStats;
use crate::error::{Error, Result};

pub use importance::{linear_weights, svr_feature_importance};
pub use solver::{solve_dual, SolverState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Rbf,
    Linear,
}

/// RBF width. `Auto` resolves to `1 / (D * Var(X))` over all entries of the
/// training matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    #[serde(with = "auto_tag")]
    Auto,
}

mod auto_tag {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(de::Error::custom(format!("expected \"auto\" or a number, got {s:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: Kernel,
    pub gamma: Gamma,
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    /// Iteration cap in sweeps of 2N pair updates; `None` means 10 N sweeps.
    pub max_passes: Option<usize>,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.2,
            kernel: Kernel::Rbf,
            gamma: Gamma::Auto,
            tol: 1e-3,
            max_passes: None,
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("SVR C must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("SVR epsilon must be >= 0, got {}", self.epsilon)));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!("SVR gamma must be positive, got {g}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("SVR tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// Gamma for training on `x`.
    pub fn resolve_gamma(&self, x: ArrayView2<'_, f64>) -> f64 {
        match self.gamma {
            Gamma::Value(g) => g,
            Gamma::Auto => {
                let d = x.ncols().max(1) as f64;
                let n = x.len() as f64;
                let var = if x.is_empty() {
                    0.0
                } else {
                    let mean = x.sum() / n;
                    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
                };
                if var > 0.0 {
                    1.0 / (d * var)
                } else {
                    1.0 / d
                }
            }
        }
    }
}

pub fn rbf_kernel(x: ArrayView1<'_, f64>, z: ArrayView1<'_, f64>, gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(z.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

fn kernel_value(kernel: Kernel, gamma: f64, x: ArrayView1<'_, f64>, z: ArrayView1<'_, f64>) -> f64 {
    match kernel {
        Kernel::Rbf => rbf_kernel(x, z, gamma),
        Kernel::Linear => x.dot(&z),
    }
}

/// Row-major `a.nrows() x b.nrows()` kernel matrix.
pub(crate) fn kernel_matrix(kernel: Kernel, gamma: f64, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.nrows() * b.nrows());
    for ra in a.rows() {
        for rb in b.rows() {
            out.push(kernel_value(kernel, gamma, ra, rb));
        }
    }
    out
}

/// A trained SVR. `params.gamma` is always resolved to a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    #[serde(with = "rows")]
    pub support_vectors: Array2<f64>,
    /// Row index of each support vector in the training matrix.
    pub support_indices: Vec<usize>,
    /// `alpha_s - alpha_s*` per support vector.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    /// Maximal KKT violation when the solver stopped.
    pub kkt_gap: f64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_stats: Option<ColumnStats>,
}

mod rows {
    use ndarray::Array2;
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.rows().into_iter().map(|r| r.to_vec()).collect();
        (m.ncols(), rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let (ncols, rows): (usize, Vec<Vec<f64>>) = Deserialize::deserialize(d)?;
        let nrows = rows.len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Array2::from_shape_vec((nrows, ncols), flat).map_err(de::Error::custom)
    }
}

impl SvrModel {
    pub fn n_features(&self) -> usize {
        self.support_vectors.ncols()
    }

    pub fn gamma(&self) -> f64 {
        match self.params.gamma {
            Gamma::Value(g) => g,
            Gamma::Auto => unreachable!("trained models carry a resolved gamma"),
        }
    }

    pub fn with_train_stats(mut self, stats: ColumnStats) -> Self {
        self.train_stats = Some(stats);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn check_finite(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<()> {
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in SVR training data".into()));
    }
    Ok(())
}

/// Train by sequential minimal optimisation on the dual problem.
///
/// Failing to reach `tol` within the iteration cap is not an error; the
/// returned model has `converged == false` and the final violation in
/// `kkt_gap`.
pub fn train_svr(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, params: &SvrParams) -> Result<SvrModel> {
    params.validate()?;
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("SVR needs at least 2 samples, got {n}")));
    }
    check_finite(x, y)?;

    let gamma = params.resolve_gamma(x);
    let kmat = kernel_matrix(params.kernel, gamma, x, x);
    let max_iter = params.max_passes.unwrap_or(10 * n).saturating_mul(2 * n);
    let state = solve_dual(&kmat, &y.to_vec(), params.c, params.epsilon, params.tol, max_iter);

    let beta = state.beta();
    let support_indices: Vec<usize> = (0..n).filter(|&i| beta[i] != 0.0).collect();
    let dual_coeffs = support_indices.iter().map(|&i| beta[i]).collect();
    if !state.converged {
        log::warn!(
            "SVR solver stopped after {} iterations with KKT violation {:.3e} > tol {:.1e}",
            state.iterations,
            state.gap,
            params.tol
        );
    }
    Ok(SvrModel {
        params: SvrParams {
            gamma: Gamma::Value(gamma),
            ..params.clone()
        },
        support_vectors: x.select(Axis(0), &support_indices),
        support_indices,
        dual_coeffs,
        bias: state.bias,
        converged: state.converged,
        kkt_gap: state.gap,
        iterations: state.iterations,
        train_stats: None,
    })
}

pub fn predict_svr(model: &SvrModel, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if x.ncols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: x.ncols(),
        });
    }
    let gamma = model.gamma();
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            model
                .support_vectors
                .rows()
                .into_iter()
                .zip(&model.dual_coeffs)
                .map(|(sv, b)| b * kernel_value(model.params.kernel, gamma, sv, row))
                .sum::<f64>()
                + model.bias
        })
        .collect())
}

/// Dual coefficients expanded to one entry per training row.
fn full_beta(model: &SvrModel, n: usize) -> Result<Vec<f64>> {
    let mut beta = vec![0.0; n];
    for (&i, &b) in model.support_indices.iter().zip(&model.dual_coeffs) {
        *beta.get_mut(i).ok_or_else(|| {
            Error::InvalidArgument(format!("support index {i} outside the {n} training rows"))
        })? = b;
    }
    Ok(beta)
}

/// Dual objective `1/2 beta' K beta + eps * sum|beta| - y' beta` of a model
/// on its training data (lower is better).
pub fn dual_objective(model: &SvrModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    let beta = full_beta(model, x.nrows())?;
    let kmat = kernel_matrix(model.params.kernel, model.gamma(), x, x);
    Ok(solver::objective(&kmat, &beta, &y.to_vec(), model.params.epsilon))
}

/// Largest violation of the dual optimality conditions for `model` on its
/// training data: the gap between the most violating up/low pair, the
/// equality constraint `sum beta = 0`, and the box `|beta| <= C`. Zero at
/// an exact optimum.
pub fn kkt_residual(model: &SvrModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let beta = full_beta(model, n)?;
    let kmat = kernel_matrix(model.params.kernel, model.gamma(), x, x);
    let y: Vec<f64> = y.to_vec();
    Ok(solver::kkt_violation(&kmat, &beta, &y, model.params.c, model.params.epsilon))
}
