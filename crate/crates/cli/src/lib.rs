//! Command-line front end: ingest a dataset, select features with RFECV,
//! benchmark complete against selected feature sets and categorise
//! valence/arousal annotations.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_benchmark, cmd_classify, cmd_ingest, cmd_select, IngestSource};
pub use config::{Format, Overrides, RunConfig};
