use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{forest_feature_importance, predict_forest, train_forest, ForestImportance, ForestModel, ForestParams};
use crate::svr::{linear_weights, predict_svr, svr_feature_importance, train_svr, Kernel, SvrModel, SvrParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Svr,
    Forest,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 2] = [EstimatorKind::Svr, EstimatorKind::Forest];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Svr => "svr",
            EstimatorKind::Forest => "forest",
        }
    }

    /// Short label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Svr => "SVR",
            EstimatorKind::Forest => "RF",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svr" => Ok(EstimatorKind::Svr),
            "forest" | "rf" => Ok(EstimatorKind::Forest),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Ranking signal for SVR inside RFE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SvrImportance {
    /// Held-out R^2 drop under column permutation, over `folds` folds.
    Permutation { folds: usize },
    /// `|w_j|` of the primal weight vector; linear kernel only.
    LinearWeight,
}

impl Default for SvrImportance {
    fn default() -> Self {
        SvrImportance::Permutation { folds: 3 }
    }
}

/// A regressor together with the signal RFE ranks features by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EstimatorSpec {
    Svr { params: SvrParams, importance: SvrImportance },
    Forest { params: ForestParams, importance: ForestImportance },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Svr(SvrModel),
    Forest(ForestModel),
}

impl FittedModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        match self {
            FittedModel::Svr(m) => predict_svr(m, x),
            FittedModel::Forest(m) => predict_forest(m, x),
        }
    }
}

impl EstimatorSpec {
    pub fn svr(params: SvrParams) -> Self {
        EstimatorSpec::Svr { params, importance: SvrImportance::default() }
    }

    pub fn forest(params: ForestParams) -> Self {
        EstimatorSpec::Forest { params, importance: ForestImportance::default() }
    }

    pub fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorSpec::Svr { .. } => EstimatorKind::Svr,
            EstimatorSpec::Forest { .. } => EstimatorKind::Forest,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorSpec::Svr { params, importance } => {
                params.validate()?;
                match importance {
                    SvrImportance::LinearWeight if params.kernel != Kernel::Linear => Err(Error::InvalidArgument(
                        "linear-weight importance needs the linear kernel".into(),
                    )),
                    SvrImportance::Permutation { folds } if *folds < 2 => {
                        Err(Error::InvalidArgument("permutation importance needs at least 2 folds".into()))
                    }
                    _ => Ok(()),
                }
            }
            EstimatorSpec::Forest { params, .. } => params.validate(),
        }
    }

    pub fn fit(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, seed: u64) -> Result<FittedModel> {
        match self {
            EstimatorSpec::Svr { params, .. } => train_svr(x, y, params).map(FittedModel::Svr),
            EstimatorSpec::Forest { params, .. } => train_forest(x, y, params, seed).map(FittedModel::Forest),
        }
    }

    /// Per-feature importance, larger meaning more important. `fitted` must
    /// come from [`EstimatorSpec::fit`] on the same `x` and `y`; modes that
    /// refit internally ignore it.
    pub fn importance(&self, fitted: &FittedModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, seed: u64) -> Result<Vec<f64>> {
        match (self, fitted) {
            (EstimatorSpec::Svr { params, importance }, FittedModel::Svr(model)) => match importance {
                SvrImportance::Permutation { folds } => svr_feature_importance(params, x, y, *folds, seed),
                SvrImportance::LinearWeight => Ok(linear_weights(model)?.into_iter().map(f64::abs).collect()),
            },
            (EstimatorSpec::Forest { importance, .. }, FittedModel::Forest(model)) => {
                forest_feature_importance(model, x, y, *importance)
            }
            _ => Err(Error::InvalidArgument("fitted model does not match the estimator kind".into())),
        }
    }
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec::forest(ForestParams::default())
    }
}

