use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::CliError;

#[derive(Parser)]
#[command(
    name = "textovision",
    version,
    about = "Project sentences into a visual feature space and rank by cosine similarity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a bag-of-words vocabulary or trigram index from a sentence file.
    BuildVocab(BuildVocabArgs),
    /// Train a sentence-to-feature network.
    Train(TrainArgs),
    /// Encode sentences into the visual space with a trained model.
    Encode(EncodeArgs),
    /// Rank items against queries by cosine similarity.
    Rank(RankArgs),
    /// Mean-pool frame features per video, optionally appending audio features.
    Pool(PoolArgs),
    /// Score a ranking file against ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum VectorizerArg {
    Bow,
    #[value(alias = "trigram")]
    Hashing,
    Word2vec,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum StopArg {
    ValLoss,
    ValR1,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SimilarityArg {
    Cosine,
    Dot,
}

#[derive(Args)]
pub struct BuildVocabArgs {
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long, value_enum, default_value = "bow")]
    pub vectorizer: VectorizerArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub val_sentences: PathBuf,
    #[arg(long)]
    pub val_features: PathBuf,
    #[arg(long, value_enum, default_value = "bow")]
    pub vectorizer: VectorizerArg,
    /// Word2vec text-format embeddings (required for --vectorizer word2vec).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Comma-separated hidden layer sizes, e.g. "1000".
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "1000")]
    pub layers: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 500)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "val-loss")]
    pub stop_on: StopArg,
    /// Explicit "<sentence_id>\t<item_id>" pairs instead of the id prefix rule.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// History TSV; defaults to "<out>.history.tsv".
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RankArgs {
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub items: PathBuf,
    /// Keep only the first N items per query.
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long, value_enum, default_value = "cosine")]
    pub similarity: SimilarityArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PoolArgs {
    /// Frame features keyed "<video_id>#<frame>".
    #[arg(long)]
    pub features: PathBuf,
    /// Audio features keyed by video id.
    #[arg(long)]
    pub audio: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub rankings: PathBuf,
    /// Ground truth "<query_id>\t<item_id>"; defaults to the id prefix rule.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "r@1,r@5,r@10,medr,meanr,mir,map")]
    pub metrics: Vec<String>,
    /// Also write the single-line TSV report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(value) = std::env::var("TEXTOVISION_THREADS") {
        let n: usize =
            value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                CliError::Usage(format!("TEXTOVISION_THREADS must be a positive integer, got {value:?}"))
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::BuildVocab(args) => commands::build_vocab(&args),
        Command::Train(args) => commands::train(&args),
        Command::Encode(args) => commands::encode(&args),
        Command::Rank(args) => commands::rank(&args),
        Command::Pool(args) => commands::pool(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
