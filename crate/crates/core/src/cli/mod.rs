//! Command-line interface.
//!
//! Exit statuses: 0 on success, 1 for usage or configuration errors, 2 for
//! data errors (unreadable or invalid corpora, missing model files).

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use self::config::{ConfigError, RunConfig, CONFIG_SCHEMA_VERSION};
use crate::evaluation::{MatchMode, ReportFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    pub(crate) fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "emoter",
    version,
    about = "Emotion experiencer detection and classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by all commands; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Run configuration (TOML)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Span matching for the headline span score
    #[arg(long = "match", value_enum)]
    pub match_mode: Option<MatchArg>,
    /// Count writer spans in the headline span score
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_writer: Option<bool>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=5))]
    pub appraisal_threshold: Option<u8>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Output location; its meaning depends on the command
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    Strict,
    Relaxed,
}

impl From<MatchArg> for MatchMode {
    fn from(m: MatchArg) -> Self {
        match m {
            MatchArg::Strict => MatchMode::Strict,
            MatchArg::Relaxed => MatchMode::Relaxed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Markdown,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Gold,
    Pipeline,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a corpus and print a validation summary
    Validate {
        /// Corpus file; defaults to the configured corpus
        corpus: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write train/dev/test parts of the corpus into --out
    Split {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train the tagger and both classifiers; --out overrides the model directory
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate on the test part; --out overrides the output directory
    Evaluate {
        #[arg(long, value_enum, default_value = "both")]
        mode: EvalMode,
        /// Model directory; defaults to the configured one
        #[arg(long)]
        models: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the pipeline on documents; writes JSON lines to --out or stdout
    Predict {
        input: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build a report from prediction dumps
    Report {
        /// Predictions made on gold spans
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Predictions made on detected spans
        #[arg(long)]
        pipeline: Option<PathBuf>,
        /// Gold corpus to score against; defaults to the configured test part
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl CommonArgs {
    /// Loads the config file (or defaults) and applies command-line
    /// overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(m) = self.match_mode {
            config.match_mode = m.into();
        }
        if let Some(w) = self.include_writer {
            config.include_writer = w;
        }
        if let Some(t) = self.appraisal_threshold {
            config.appraisal_threshold = t;
        }
        if let Some(f) = self.format {
            config.format = f.into();
        }
        config.validate()?;
        Ok(config)
    }
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
