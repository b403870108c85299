//! Command-line front end.
//!
//! Exit status: 0 success, 1 I/O failure, 2 invalid arguments, config or
//! data, 3 no features survive selection, 4 training diverged.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::error::Error;

pub use config::{
    NasSection, PlotSection, RunConfig, SelectSection, SplitSection, SubsampleSection,
    DEFAULT_SEED, SCHEMA_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_FEATURES: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "densecascade",
    version,
    about = "PCA-cascade dense network search, feature selection and dataset tools",
    after_help = "Flags given on the command line override values from --config."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Copy a class-per-directory dataset into stratified train/val/test splits.
    Split(SplitArgs),
    /// Copy a per-class random fraction of a class-per-directory dataset.
    Subsample(SubsampleArgs),
    /// Apply the configured selector chain to a CSV table.
    Select(SelectArgs),
    /// Size and train a dense network layer by layer from PCA of activations.
    Nas(NasArgs),
    /// Evaluate a saved model on a CSV table and render report documents.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Source directory with one subdirectory per class.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Destination directory; must be absent or empty.
    #[arg(long)]
    pub dest: PathBuf,
    /// Training share of each class, rounded down.
    #[arg(long, default_value_t = 0.7)]
    pub train: f64,
    /// Validation share of each class, rounded down.
    #[arg(long, default_value_t = 0.15)]
    pub val: f64,
    /// Test share; the per-class remainder after train and val.
    #[arg(long, default_value_t = 0.15)]
    pub test: f64,
    /// Seed for the per-class shuffles.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// TOML run configuration (`[split]` section).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SubsampleArgs {
    /// Source directory with one subdirectory per class.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Destination directory; must be absent or empty.
    #[arg(long)]
    pub dest: PathBuf,
    /// Share of each class to keep, in (0, 1]; at least one file per class.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// TOML run configuration (`[subsample]` section).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Input CSV with a header row.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    pub label: String,
    /// TOML run configuration (`[select]` section).
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV holding the surviving columns and the label.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NasArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    pub train: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    pub label: String,
    /// Validation CSV; when absent, a stratified share of --train is held out.
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// TOML run configuration (`[search]`, `[nas]`, `[plot]` sections).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write the trained `.cmnet` model.
    #[arg(long)]
    pub out_model: PathBuf,
    /// Directory for width/variance tables, histories and plots.
    #[arg(long)]
    pub report_dir: PathBuf,
    /// Number of searched hidden layers.
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    /// One variance target for all layers, or a comma-separated list.
    #[arg(long, default_value = "0.95,0.84,0.63")]
    pub pca_variance: String,
    /// Maximum epochs per training run.
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Mini-batch size.
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Optimizer step size.
    #[arg(long, default_value_t = 0.001)]
    pub learn_rate: f64,
    /// Epochs without improvement tolerated before training stops.
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    /// Seed for weight initialisation, shuffling, dropout and the held-out split.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Held-out share of --train when --val is absent; 0 disables validation.
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    /// Print one line per epoch to standard error (1) or stay quiet (0).
    #[arg(long, default_value_t = 0)]
    pub verbose: u8,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A `.cmnet` model file.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV to evaluate, with the same feature columns the model was trained on.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    pub label: String,
    /// Directory for the confusion matrix documents.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Training history JSON to render as curves.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// TOML run configuration (`[plot]` section).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Heading of the confusion matrix document.
    #[arg(long, default_value = "Confusion matrix")]
    pub title: String,
}

/// Tells whether a flag was typed on the command line (as opposed to
/// falling back to its default), so it may override the config file.
struct Given<'a>(&'a ArgMatches);

impl Given<'_> {
    fn has(&self, id: &str) -> bool {
        matches!(self.0.value_source(id), Some(ValueSource::CommandLine))
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::NoFeaturesSurvive | Error::ChainStageEmpty { .. } => EXIT_NO_FEATURES,
        Error::Divergence { .. } | Error::StageDivergence { .. } => EXIT_DIVERGED,
        Error::Invalid(_) | Error::Format(_) => EXIT_INVALID,
    }
}

/// Parses `args` (program name first) and runs the command, writing the
/// normal report to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_INVALID
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return EXIT_INVALID;
        }
    };
    let sub = matches
        .subcommand()
        .map(|(_, m)| m)
        .expect("subcommand is required");
    let given = Given(sub);
    let result = match &cli.command {
        Command::Split(a) => commands::split(a, &given, out),
        Command::Subsample(a) => commands::subsample(a, &given, out),
        Command::Select(a) => commands::select(a, out),
        Command::Nas(a) => commands::nas(a, &given, out),
        Command::Report(a) => commands::report(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
