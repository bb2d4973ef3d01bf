//! Run configuration: a TOML file merged with command-line flags.
//!
//! Every key is optional. Flags win over the file, the file wins over the
//! built-in defaults. The resolved configuration is recorded in each
//! artifact; the output directory and thread count are left out because
//! they do not affect any result.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mersel::dataset::{AdapterConfig, SyntheticSpec, Target, TargetScaling};
use mersel::emotion::{CategoryMode, HevnerLayout};
use mersel::forest::{ForestImportance, ForestParams};
use mersel::selection::{EstimatorKind, EstimatorSpec, SvrImportance};
use mersel::svr::SvrParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Md,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Md),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json, md or csv)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Md => "md",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; drawn and printed when absent.
    pub seed: Option<u64>,
    pub folds: usize,
    pub estimator: EstimatorKind,
    pub target: Target,
    pub step: usize,
    /// Fraction of rows used for selection.
    pub ratio: f64,
    /// Benchmark on the rows left out of selection instead of all rows.
    pub holdout: bool,
    /// Z-score the feature matrix during ingestion.
    pub normalize: bool,
    pub formats: Vec<Format>,
    pub plots: bool,
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    /// Benchmark cells; every (model, target) pair when absent.
    pub cells: Option<Vec<(EstimatorKind, Target)>>,
    pub svr: SvrParams,
    pub svr_importance: SvrImportance,
    pub forest: ForestParams,
    pub forest_importance: ForestImportance,
    pub canonical_scaling: TargetScaling,
    pub adapter: AdapterConfig,
    pub synthetic: SyntheticSpec,
    pub mode: CategoryMode,
    pub layout: HevnerLayout,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            folds: 10,
            estimator: EstimatorKind::Forest,
            target: Target::Valence,
            step: 1,
            ratio: 0.7,
            holdout: false,
            normalize: true,
            formats: vec![Format::Json, Format::Md, Format::Csv],
            plots: true,
            out_dir: PathBuf::from("out"),
            threads: None,
            cells: None,
            svr: SvrParams::default(),
            svr_importance: SvrImportance::default(),
            forest: ForestParams::default(),
            forest_importance: ForestImportance::default(),
            canonical_scaling: TargetScaling::default(),
            adapter: AdapterConfig::default(),
            synthetic: SyntheticSpec::default(),
            mode: CategoryMode::Quadrant,
            layout: HevnerLayout::default(),
        }
    }
}

/// Flag values; `None` leaves the file or default value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub estimator: Option<EstimatorKind>,
    pub target: Option<Target>,
    pub step: Option<usize>,
    pub ratio: Option<f64>,
    pub holdout: bool,
    pub formats: Option<Vec<Format>>,
    pub no_plots: bool,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub mode: Option<CategoryMode>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Parse a config from JSON: either a bare config object or any
    /// artifact carrying one under `config`.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(inner) = value.get_mut("config").filter(|v| v.is_object()) {
            value = inner.take();
        }
        Ok(serde_json::from_value(value)?)
    }

    /// Load a `.json` file (a recorded config, for replay) or TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.with_context(|| format!("parsing config {}", path.display()))
    }

    /// Defaults, then the optional file, then the flags.
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(path) => Self::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, flags: &Overrides) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = flags.$field.clone() { self.$field = v; })*
            };
        }
        take!(folds, estimator, target, step, ratio, formats, mode);
        if flags.seed.is_some() {
            self.seed = flags.seed;
        }
        if let Some(dir) = &flags.out_dir {
            self.out_dir = dir.clone();
        }
        if flags.threads.is_some() {
            self.threads = flags.threads;
        }
        self.holdout |= flags.holdout;
        if flags.no_plots {
            self.plots = false;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            bail!("folds must be >= 2, got {}", self.folds);
        }
        if self.step < 1 {
            bail!("step must be >= 1");
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            bail!("ratio must be in (0, 1], got {}", self.ratio);
        }
        if self.threads == Some(0) {
            bail!("threads must be >= 1");
        }
        self.svr.validate()?;
        self.forest.validate()?;
        self.layout.validate()?;
        Ok(())
    }

    pub fn estimator_spec(&self, kind: EstimatorKind) -> EstimatorSpec {
        match kind {
            EstimatorKind::Svr => EstimatorSpec::Svr {
                params: self.svr.clone(),
                importance: self.svr_importance,
            },
            EstimatorKind::Forest => EstimatorSpec::Forest {
                params: self.forest.clone(),
                importance: self.forest_importance,
            },
        }
    }

    pub fn cells(&self) -> Vec<(EstimatorKind, Target)> {
        self.cells.clone().unwrap_or_else(|| {
            EstimatorKind::ALL
                .iter()
                .flat_map(|&m| Target::ALL.iter().map(move |&t| (m, t)))
                .collect()
        })
    }

    /// The configured seed, or a fresh one announced on stderr. Drawn seeds
    /// stay below 2^32 so they fit every config format.
    pub fn resolve_seed(&mut self) -> u64 {
        match self.seed {
            Some(s) => s,
            None => {
                let s = rand::random::<u32>() as u64;
                eprintln!("seed: {s} (drawn; pass --seed {s} to replay)");
                self.seed = Some(s);
                s
            }
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    /// Run `f` on a pool of `threads` workers, or on the global pool.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
            None => Ok(f()),
        }
    }
}
