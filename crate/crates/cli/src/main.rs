//! `entclass`: acquire text for entities, build corpora, train, evaluate.
//!
//! Every command works inside `runs/{run_id}/` and records itself in that
//! directory's `manifest.json` before writing anything else.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::RunConfig;
use crate::error::Failure;

#[derive(Parser)]
#[command(
    name = "entclass",
    version,
    about = "Entity classification from acquired web text",
    args_override_self = true
)]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Defaults to a hash of the config.
    #[arg(long, global = true)]
    run_id: Option<String>,
    /// Refetch instead of reading the cache.
    #[arg(long, global = true)]
    refresh: bool,
    /// Treat any missing text or failed fetch as fatal.
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a config value, e.g. `--set train.epochs=5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch snippets and summaries into the cache.
    Acquire,
    /// Join cached text with names and write the corpora.
    Build,
    /// Train the native classifier, or submit a remote fine-tune.
    Train {
        #[arg(long)]
        remote: bool,
        /// Poll the remote job until it finishes.
        #[arg(long, requires = "remote")]
        wait: bool,
    },
    /// Predict the test split.
    Predict {
        #[arg(long)]
        remote: bool,
        /// Fine-tuned model for remote prediction.
        #[arg(long)]
        model_id: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Macro precision, recall and F1 of a predictions file.
    Eval {
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Another report.json to compare per category.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Confidence-threshold sweep.
    Sweep {
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrain on the top-k cached snippets for several k.
    Ablate {
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ask the LLM for codes directly.
    Baseline {
        /// Cached source to include as context, e.g. `gsnip`.
        #[arg(long)]
        context: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

async fn run(cli: Cli) -> Result<(), Failure> {
    let config = RunConfig::load(cli.config.as_deref(), &cli.sets, cli.seed).map_err(Failure::config)?;
    let ctx = Ctx::new(config, cli.run_id, cli.refresh, cli.strict)?;
    tracing::info!(run_id = %ctx.run_id, "run");
    match cli.command {
        Command::Acquire => commands::acquire(&ctx).await,
        Command::Build => commands::build(&ctx).await,
        Command::Train { remote, wait } => commands::train_cmd(&ctx, remote, wait).await,
        Command::Predict { remote, model_id, out } => commands::predict(&ctx, remote, model_id, out.as_deref()).await,
        Command::Eval { predictions, out, compare } => {
            commands::eval(&ctx, predictions.as_deref(), out.as_deref(), compare.as_deref())
        }
        Command::Sweep { predictions, out } => commands::sweep(&ctx, predictions.as_deref(), out.as_deref()),
        Command::Ablate { ks, out } => commands::ablate(&ctx, ks, out.as_deref()),
        Command::Baseline { context, model, out } => {
            commands::baseline(&ctx, context.as_deref(), model.as_deref(), out.as_deref()).await
        }
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
