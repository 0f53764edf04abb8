//! The `pheno` command: every pipeline stage as a subcommand reading and
//! writing plain files, plus the review HTTP service.
//!
//! Stage order for a fresh corpus:
//! `ingest` → `train-embeddings` → `expand` / `review-serve` → `match` →
//! `train-classifier` → `predict`, with `llm-run` as the alternative
//! predictor and `evaluate` / `report` to score and summarize.

pub mod commands;
pub mod config;
pub mod error;
pub mod review;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::{CliError, CliResult, ErrorCode};

#[derive(Debug, Parser)]
#[command(name = "pheno", version, about = "Note-level neurological phenotyping from physician notes")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON run configuration with parameter blocks.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every randomized stage [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for matching, prediction and LLM runs [default: 4].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Notes CSV with a header row.
    #[arg(long, value_name = "CSV")]
    pub corpus: PathBuf,
    #[arg(long, default_value = "note_id")]
    pub id_column: String,
    #[arg(long, default_value = "text")]
    pub text_column: String,
}

#[derive(Debug, Clone, Args)]
pub struct NegationArgs {
    /// Tokens before a match in which a pre-negation may end.
    #[arg(long)]
    pub pre_window: Option<usize>,
    /// Tokens after a match in which a post-negation may begin.
    #[arg(long)]
    pub post_window: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrequencyFormat {
    Text,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a notes CSV and write it back in canonical form.
    Ingest {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, default_value = "note_id")]
        id_column: String,
        #[arg(long, default_value = "text")]
        text_column: String,
        /// Canonical CSV (`note_id,text,<meta columns>`).
        #[arg(long)]
        output: PathBuf,
    },
    /// Train word and phrase vectors on the corpus.
    TrainEmbeddings {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Text vector file.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        negative_samples: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        min_count: Option<u64>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        phrase_min_count: Option<u64>,
        #[arg(long)]
        phrase_threshold: Option<f64>,
    },
    /// Propose simclin candidates near the lexicon's seeds and accepted terms.
    Expand {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Minimum cosine similarity [default: the lexicon's threshold].
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 20)]
        limit_per_seed: usize,
        /// Candidates as JSON lines [default: stdout].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Serve the candidate review API (and UI assets) over HTTP.
    ReviewServe {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// 0 picks a free port.
        #[arg(long, default_value_t = 8765)]
        port: u16,
        /// Directory of built UI assets to serve at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        limit_per_seed: usize,
    },
    /// Match simclins with negation and write the note-by-label matrix.
    Match {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        lexicon: PathBuf,
        #[command(flatten)]
        negation: NegationArgs,
        /// Matrix CSV.
        #[arg(long)]
        output: PathBuf,
        /// Also dump every match as JSON lines.
        #[arg(long)]
        matches: Option<PathBuf>,
    },
    /// Fit the per-label linear classifier on matcher-labelled notes.
    TrainClassifier {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        lexicon: PathBuf,
        #[command(flatten)]
        negation: NegationArgs,
        /// Model file.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        negative_ratio: Option<f64>,
    },
    /// Apply a trained classifier to every note.
    Predict {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Matrix CSV.
        #[arg(long)]
        output: PathBuf,
        /// Per-label margins CSV.
        #[arg(long)]
        margins: Option<PathBuf>,
    },
    /// Phenotype every note with a chat-completion endpoint.
    LlmRun {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Matrix CSV; failed notes are all-zero rows.
        #[arg(long)]
        output: PathBuf,
        /// JSON-lines log of every request and response.
        #[arg(long)]
        audit: PathBuf,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// Environment variable holding the bearer token.
        #[arg(long)]
        token_env: Option<String>,
        #[arg(long)]
        timeout_secs: Option<f64>,
        #[arg(long)]
        max_retries: Option<u32>,
        #[arg(long)]
        backoff_base_ms: Option<u64>,
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        requests_per_minute: Option<f64>,
        /// Send the instructions once per worker session.
        #[arg(long)]
        sessions: bool,
        /// Omit the answer-format hint message.
        #[arg(long)]
        no_format_hint: bool,
    },
    /// Score predictions against gold annotations.
    Evaluate {
        /// Gold span annotations (JSON lines) or a matrix CSV.
        #[arg(long)]
        gold: PathBuf,
        /// Prediction matrix CSV, optionally `NAME=PATH`; repeatable.
        #[arg(long, value_name = "[NAME=]CSV")]
        pred: Vec<String>,
        /// LLM audit log to re-score offline, optionally `NAME=PATH`; repeatable.
        #[arg(long, value_name = "[NAME=]JSONL")]
        audit: Vec<String>,
        /// Value of every 0/0 ratio.
        #[arg(long, default_value_t = 0.0)]
        zero_division: f64,
        /// Add metrics over pooled counts.
        #[arg(long)]
        micro: bool,
        /// Append a per-label table for each prediction.
        #[arg(long)]
        per_label: bool,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
        #[arg(long, default_value_t = 2)]
        decimals: usize,
        /// [default: stdout]
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Count notes per label.
    Report {
        /// Matrix CSV or gold span annotations (JSON lines).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FrequencyFormat::Text)]
        format: FrequencyFormat,
        /// Longest bar in the text format.
        #[arg(long, default_value_t = 40)]
        width: usize,
        /// [default: stdout]
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; errors are printed as one line on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let first = e
                .to_string()
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("{}", CliError::new(ErrorCode::Usage, first));
            return 1;
        }
    };
    init_logging(cli.global.verbose);
    match commands::run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}
