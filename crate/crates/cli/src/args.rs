//! Command-line grammar and dispatch.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use mersel::dataset::Target;
use mersel::emotion::CategoryMode;
use mersel::selection::EstimatorKind;

use crate::commands::{cmd_benchmark, cmd_classify, cmd_ingest, cmd_select, IngestSource};
use crate::config::{Format, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "mersel", version, about = "Feature selection and regression benchmarking for music emotion recognition")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed. A random one is drawn and printed when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of cross-validation folds.
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Estimator used for selection: svr or forest.
    #[arg(long, global = true)]
    pub estimator: Option<EstimatorKind>,
    /// Selection target: valence or arousal.
    #[arg(long, global = true)]
    pub target: Option<Target>,
    /// Features removed per elimination round.
    #[arg(long, global = true)]
    pub step: Option<usize>,
    /// Fraction of rows used for selection.
    #[arg(long, global = true)]
    pub ratio: Option<f64>,
    /// Directory all outputs are written to.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Report formats, comma separated: json, md, csv.
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
    /// Skip SVG plots.
    #[arg(long, global = true)]
    pub no_plots: bool,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Benchmark on the rows held out of selection.
    #[arg(long, global = true)]
    pub holdout: bool,
    /// Categorisation scheme: quadrant or hevner.
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<CategoryMode>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a canonical dataset CSV with a provenance sidecar.
    Ingest {
        #[command(subcommand)]
        source: IngestCommand,
    },
    /// Run RFECV and write the selected feature set.
    Select {
        /// Canonical dataset CSV.
        dataset: PathBuf,
    },
    /// Compare complete and selected feature sets under k-fold CV.
    Benchmark {
        /// Canonical dataset CSV.
        dataset: PathBuf,
        /// Selected feature set artifacts, one per benchmark cell.
        #[arg(long = "sfs", required = true, num_args = 1..)]
        selections: Vec<PathBuf>,
    },
    /// Label valence/arousal annotations by quadrant or Hevner sector.
    Classify {
        /// CSV with valence and arousal columns.
        annotations: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum IngestCommand {
    /// Re-validate (and optionally normalise) a canonical CSV.
    Canonical {
        path: PathBuf,
        #[arg(long, default_value = "dataset.csv")]
        output: String,
    },
    /// Per-song feature files plus static valence/arousal tables.
    Deam {
        features: PathBuf,
        valence: PathBuf,
        arousal: PathBuf,
        #[arg(long, default_value = "dataset.csv")]
        output: String,
    },
    /// Generate linear synthetic data from the `[synthetic]` config section.
    Synthetic {
        #[arg(long, default_value = "dataset.csv")]
        output: String,
    },
}

fn parse_mode(s: &str) -> Result<CategoryMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "quadrant" => Ok(CategoryMode::Quadrant),
        "hevner" => Ok(CategoryMode::Hevner),
        other => Err(format!("unknown mode `{other}` (expected quadrant or hevner)")),
    }
}

impl GlobalArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            folds: self.folds,
            estimator: self.estimator,
            target: self.target,
            step: self.step,
            ratio: self.ratio,
            holdout: self.holdout,
            formats: self.format.clone(),
            no_plots: self.no_plots,
            out_dir: self.out_dir.clone(),
            threads: self.threads,
            mode: self.mode,
        }
    }
}

/// Execute a parsed command line, reporting results on stdout.
pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::resolve(cli.global.config.as_deref(), &cli.global.overrides())?;
    match cli.command {
        Command::Ingest { source } => {
            let (source, output) = match source {
                IngestCommand::Canonical { path, output } => (IngestSource::Canonical(path), output),
                IngestCommand::Deam { features, valence, arousal, output } => {
                    (IngestSource::Deam { features, valence, arousal }, output)
                }
                IngestCommand::Synthetic { output } => (IngestSource::Synthetic, output),
            };
            let out = cmd_ingest(&source, &output, &cfg)?;
            let p = &out.provenance;
            println!("{} songs x {} features -> {}", p.n_samples, p.n_features, out.dataset_path.display());
            if !p.skipped_songs.is_empty() {
                println!("skipped {} song(s): {}", p.skipped_songs.len(), p.skipped_songs.join(", "));
            }
        }
        Command::Select { dataset } => {
            let out = cmd_select(&dataset, &cfg)?;
            println!(
                "kept {} of {} features ({:.1}% reduction) -> {}",
                out.chosen_size,
                out.n_features,
                100.0 * out.reduction_rate,
                out.artifact_path.display()
            );
        }
        Command::Benchmark { dataset, selections } => {
            let out = cmd_benchmark(&dataset, &selections, &cfg)?;
            print!("{}", mersel::evaluation::to_markdown(&out.report));
            for path in &out.written {
                log::info!("wrote {}", path.display());
            }
        }
        Command::Classify { annotations } => {
            let out = cmd_classify(&annotations, &cfg)?;
            for (label, count) in &out.counts {
                println!("{label}\t{count}");
            }
            log::info!("wrote {}", out.csv_path.display());
        }
    }
    Ok(())
}
