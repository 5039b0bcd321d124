//! Command-line front end. Each stage reads and writes files in the output
//! directory, so stages can be rerun independently; `pipeline` runs them in
//! order.

mod config;
mod stages;

pub use config::{Combination, PipelineConfig, Settings, Source, KEYS};
pub use stages::{
    run_filter, run_fit, run_label, run_pipeline, run_report, run_select_k, run_sentiment, run_topics,
};

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "POPTOPIC_CONFIG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("empty result: {0}")]
    Empty(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Empty(_) => 3,
        }
    }
}

macro_rules! overrides {
    ($($field:ident $(| $alias:literal)?),* $(,)?) => {
        /// Flags overriding config-file keys of the same name.
        #[derive(Debug, Clone, Default, Args)]
        pub struct Overrides {
            $(
                #[arg(long = stringify!($field), value_name = "VALUE", hide_short_help = true $(, alias = $alias)?)]
                pub $field: Option<String>,
            )*
        }

        impl Overrides {
            fn apply(&self, settings: &mut Settings) -> Result<(), CliError> {
                $(
                    if let Some(v) = &self.$field {
                        settings.set(stringify!($field), v)?;
                    }
                )*
                Ok(())
            }
        }
    };
}

overrides!(
    input, input_format, strict, queries, lowercase, keep_prefixes, min_token_len, strip_urls,
    lexicon, stopwords, min_df, posts, corpus, topics, alpha, beta, sweeps, seed,
    holdout_fraction, particles, k_grid | "grid", top_n, taxonomy, rules, labeling, masses,
    mass_mode, lenient, combine, output_dir,
);

#[derive(Debug, Parser)]
#[command(name = "poptopic", version, about = "Popularity analysis over archived social-media posts")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Keep posts matching any query, then drop retweets, URL posts and duplicates.
    Filter(Overrides),
    /// Split filtered posts into positive, negative and neutral files.
    Sentiment(Overrides),
    /// Fit LDA to the positive posts.
    Fit(Overrides),
    /// Choose the number of topics by held-out likelihood.
    #[command(name = "select-k")]
    SelectK(Overrides),
    /// Write the top words of a fitted model.
    Topics(Overrides),
    /// Review topics and assign taxonomy labels interactively.
    Label(Overrides),
    /// Compute the ranked label distribution.
    Report(Overrides),
    /// Run filter, sentiment, select-k (when k_grid is set), fit and report.
    Pipeline(Overrides),
    /// List configuration keys.
    Keys,
}

fn load_settings(config: Option<&PathBuf>, overrides: &Overrides) -> Result<PipelineConfig, CliError> {
    let mut settings = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            Settings::parse(&text)?
        }
        None => Settings::default(),
    };
    overrides.apply(&mut settings)?;
    PipelineConfig::from_settings(settings)
}

/// Run with explicit argument list and terminal streams; returns the exit
/// code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, stdin, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("poptopic: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, stdin: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let config = cli.config.as_ref();
    match cli.command {
        Command::Keys => {
            for (key, help) in KEYS {
                writeln!(out, "{key:<18} {help}").map_err(|e| CliError::Data(e.to_string()))?;
            }
            Ok(())
        }
        Command::Filter(o) => run_filter(&load_settings(config, &o)?, out).map(drop),
        Command::Sentiment(o) => run_sentiment(&load_settings(config, &o)?, out).map(drop),
        Command::Fit(o) => run_fit(&load_settings(config, &o)?, out),
        Command::SelectK(o) => run_select_k(&load_settings(config, &o)?, out).map(drop),
        Command::Topics(o) => run_topics(&load_settings(config, &o)?, out),
        Command::Label(o) => run_label(&load_settings(config, &o)?, stdin, out),
        Command::Report(o) => run_report(&load_settings(config, &o)?, out),
        Command::Pipeline(o) => run_pipeline(&load_settings(config, &o)?, out),
    }
}
