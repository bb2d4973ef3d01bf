//! Wrapper-based feature selection and regression benchmarking for music
//! emotion recognition.
//!
//! The crate is organised around the pipeline it serves:
//!
//! * [`dataset`] ingests per-song feature tables, clips and averages them,
//!   z-score normalises the resulting matrix and produces seeded splits.
//! * [`svr`] and [`forest`] are the two regressors: an epsilon-SVR trained by
//!   sequential minimal optimisation and a bagged CART regression forest.
//! * [`selection`] runs recursive feature elimination (RFE) and its
//!   cross-validated variant (RFECV) on top of either regressor.
//! * [`evaluation`] holds metrics, k-fold cross-validation and the
//!   complete-vs-selected feature set benchmark with its report renderers.
//! * [`emotion`] maps valence/arousal points onto quadrants and eight-sector
//!   adjective clusters.

pub mod dataset;
pub mod emotion;
pub mod error;
pub mod evaluation;
pub mod forest;
pub mod rng;
pub mod selection;
pub mod svr;

pub use error::{Error, Result};
