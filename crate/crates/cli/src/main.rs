//! Command-line front door for the emoji-prediction pipeline.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{gen::GenArgs, predict::PredictArgs, CliError};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "emopred",
    about = "Emoji prediction over tweet corpora: ingestion, analysis, training, and reports",
    after_help = "\
Outputs land under paths.out_dir with fixed names:
  ingest    labeled.jsonl, label_set.txt, lexicon.tsv, sources.txt,
            source_aliases.tsv, ingest_summary.json
  stats     label_distribution.csv, source_distribution.csv,
            source_top_emoji.csv, top_features_text.csv, top_features_hashtags.csv
  train     checkpoint.json or model.json, history.csv, text_vocab.tsv, hashtag_vocab.tsv
  evaluate  metrics.json
  suite     suite.csv, suite.txt
Exit codes: 0 ok, 1 bad input, 2 missing resource, 3 consistency violation."
)]
struct Cli {
    /// Run configuration (TOML). Required by every command except gen-synthetic.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config value by dotted name, e.g. --set encode.max_len=64.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Override paths.out_dir.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads for intra-stage parallelism (forest tree growth).
    /// Results are identical for any value.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a raw JSONL corpus into a labeled dataset.
    Ingest,
    /// Emit label/source distribution and top-feature reports.
    Stats,
    /// Train the configured model on the stratified split.
    Train,
    /// Evaluate the trained model on the test split.
    Evaluate,
    /// Run the standard seven-row feature/dataset comparison.
    Suite,
    /// Predict the emoji for raw text through the identical preprocessing path.
    Predict {
        /// One tweet text.
        #[arg(long)]
        text: Option<String>,
        /// File with one tweet text per line.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Application source override (e.g. "Twitter for iPhone").
        #[arg(long)]
        source: Option<String>,
        /// Comma-separated hashtag override (replaces extracted tags).
        #[arg(long)]
        hashtags: Option<String>,
        /// How many candidates to print.
        #[arg(long)]
        top_k: Option<usize>,
        /// Print preprocessed tokens to stderr.
        #[arg(long)]
        show_tokens: bool,
    },
    /// Generate a deterministic synthetic corpus.
    #[command(name = "gen-synthetic")]
    GenSynthetic {
        /// Built-in template: ablation, capacity, or feature-recovery.
        #[arg(long)]
        preset: Option<String>,
        /// JSON template file (alternative to --preset).
        #[arg(long)]
        template: Option<PathBuf>,
        /// Number of tweets.
        #[arg(long, default_value_t = 400)]
        n: usize,
        /// Seed override (defaults to the config seed, or 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Output path (defaults to <out_dir>/synthetic.jsonl).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_run_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::input("this command needs --config <file>"))?;
    if !path.exists() {
        return Err(CliError::missing(format!("config not found: {}", path.display())));
    }
    let mut config = config::load_config(path, &cli.overrides)?;
    if let Some(out_dir) = &cli.out_dir {
        config.paths.out_dir = out_dir.clone();
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest => commands::ingest::run(&load_run_config(cli)?),
        Command::Stats => commands::stats::run(&load_run_config(cli)?),
        Command::Train => commands::train::run(&load_run_config(cli)?, cli.threads),
        Command::Evaluate => commands::evaluate::run(&load_run_config(cli)?),
        Command::Suite => commands::suite::run(&load_run_config(cli)?),
        Command::Predict { text, file, source, hashtags, top_k, show_tokens } => {
            let args = PredictArgs {
                text: text.clone(),
                file: file.clone(),
                source: source.clone(),
                hashtags: hashtags.clone(),
                top_k: *top_k,
                show_tokens: *show_tokens,
            };
            commands::predict::run(&load_run_config(cli)?, &args)
        }
        Command::GenSynthetic { preset, template, n, seed, out } => {
            let config = match &cli.config {
                Some(_) => Some(load_run_config(cli)?),
                None => None,
            };
            let args = GenArgs {
                preset: preset.clone(),
                template: template.clone(),
                n: *n,
                seed: *seed,
                out: out.clone(),
            };
            commands::gen::run(config.as_ref(), &args)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code.clamp(1, 255) as u8)
        }
    }
}
