//! Pipeline driver: preprocess | train | extract | recommend | evaluate |
//! pipeline, configured by one JSON file with flag overrides.
//!
//! Exit codes: 0 success, 2 config error, 3 i/o or data-format error,
//! 4 domain/numeric failure, 5 missing stage artifact.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aspectrec::config::PipelineConfig;
use aspectrec::pipeline;
use aspectrec::Error;

#[derive(Parser)]
#[command(
    name = "aspectrec",
    about = "Weighted-aspect opinion mining and recommendation pipeline",
    version
)]
struct Cli {
    /// Pipeline configuration (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize, tag, weak-label, and split the dataset
    Preprocess,
    /// SMOTE-balance the train split and fit the network
    Train,
    /// Extract scored aspect mentions, cluster them, and build the
    /// weighted rating matrix
    Extract,
    /// Fit the rating model and write top-N recommendations
    Recommend {
        /// Recommend for this user only (default: every user)
        #[arg(long)]
        user: Option<String>,
        /// Number of recommendations per user
        #[arg(long)]
        n: Option<usize>,
    },
    /// Compute held-out metrics (MAE, RMSE, F1, accuracy)
    Evaluate,
    /// Run every stage in order
    Pipeline,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = PipelineConfig::from_file(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Preprocess => {
            let summary = pipeline::run_preprocess(&config)?;
            println!(
                "preprocess: {} records ({} skipped, {} malformed), train/test = {}/{}, vocab = {}",
                summary.n_records,
                summary.skipped,
                summary.malformed,
                summary.n_train,
                summary.n_test,
                summary.vocab_size
            );
        }
        Command::Train => {
            let summary = pipeline::run_train(&config)?;
            println!(
                "train: {} samples ({} synthetic{}), {} epochs, final loss {:.6}",
                summary.n_train_samples,
                summary.n_synthetic,
                if summary.smote_k_clamped {
                    ", k clamped"
                } else {
                    ""
                },
                summary.epochs,
                summary.final_loss
            );
        }
        Command::Extract => {
            let summary = pipeline::run_extract(&config)?;
            println!(
                "extract: {} mentions in {} clusters, weights {:?}, {} weighted cells",
                summary.n_mentions,
                summary.n_clusters,
                summary
                    .weights
                    .iter()
                    .map(|w| (w * 1000.0).round() / 1000.0)
                    .collect::<Vec<_>>(),
                summary.n_weighted_cells
            );
        }
        Command::Recommend { user, n } => {
            let summary =
                pipeline::run_recommend(&config, user.as_deref(), n.unwrap_or(config.top_n))?;
            println!(
                "recommend: {} users x {} items, wrote {} recommendations",
                summary.n_users, summary.n_items, summary.n_recommendations
            );
        }
        Command::Evaluate => {
            let metrics = pipeline::run_evaluate(&config)?;
            println!(
                "evaluate: mae {:.4}, rmse {:.4}, f1 {:.4}, accuracy {:.4} over {} test records",
                metrics.mae, metrics.rmse, metrics.f1, metrics.accuracy, metrics.n_test
            );
        }
        Command::Pipeline => {
            let metrics = pipeline::run_pipeline(&config)?;
            println!(
                "pipeline: mae {:.4}, rmse {:.4}, f1 {:.4}, accuracy {:.4} over {} test records",
                metrics.mae, metrics.rmse, metrics.f1, metrics.accuracy, metrics.n_test
            );
        }
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io { .. } | Error::Format(_) => 3,
        Error::Domain(_) | Error::Numeric(_) | Error::Shape(_) => 4,
        Error::MissingStage { .. } => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
