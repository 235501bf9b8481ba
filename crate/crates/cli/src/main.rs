mod assert;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hiq::HiqError;
use thiserror::Error;

use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] HiqError),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: HiqError },
    #[error("{0}")]
    Decode(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::File { .. } => 3,
            CliError::Decode(_) => 4,
        }
    }
}

/// Layered color 2D symbols: encode, simulate, train, decode and benchmark.
#[derive(Parser)]
#[command(name = "hiq", version)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// `key = value` defaults; flags on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a payload file into a symbol container.
    Encode(EncodeArgs),
    /// Render a symbol to an undistorted image.
    Render(RenderArgs),
    /// Render a symbol through a synthetic distortion profile.
    Distort(DistortArgs),
    /// Generate a labeled synthetic corpus.
    Corpus(CorpusArgs),
    /// Train a color classifier on a corpus.
    Train(TrainArgs),
    /// Decode a single image.
    Decode(DecodeArgs),
    /// Decode several frames of one symbol, accumulating blocks.
    Session(SessionArgs),
    /// Score classifiers on a corpus and emit a CSV report.
    Bench(BenchArgs),
}

#[derive(Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub layers: Option<usize>,
    /// One level for every layer, or a comma list such as `L,L,M`.
    #[arg(long)]
    pub ec: Option<String>,
    /// Defaults to the smallest version that fits.
    #[arg(long)]
    pub version: Option<u8>,
    #[arg(long)]
    pub no_randomize: bool,
}

#[derive(Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub symbol: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub module_px: Option<usize>,
    #[arg(long)]
    pub quiet: Option<usize>,
}

#[derive(Args)]
pub struct DistortArgs {
    #[command(flatten)]
    pub render: RenderArgs,
    /// Illumination preset.
    #[arg(long)]
    pub lighting: Option<String>,
    /// Center weight of symmetric cross-module interference (1 = none).
    #[arg(long)]
    pub cmi: Option<f64>,
    /// Off-diagonal channel leakage per row.
    #[arg(long)]
    pub cci: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub blur: Option<f64>,
    /// Largest perspective corner shift as a fraction of the image side.
    #[arg(long)]
    pub warp: Option<f64>,
    #[arg(long)]
    pub gradient: Option<f64>,
}

#[derive(Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    /// `clean`, `training` or `cmi-heavy`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub version: Option<u8>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub ec: Option<String>,
    #[arg(long)]
    pub module_px: Option<usize>,
    #[arg(long)]
    pub no_randomize: bool,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `qda`, `qda-cmi`, `lsvm` or `lsvm-cmi`.
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
    /// Noisy-white copies per sample.
    #[arg(long)]
    pub augment: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// SVM penalty.
    #[arg(long)]
    pub c: Option<f64>,
    /// Cap on training samples after augmentation (seeded subset).
    #[arg(long)]
    pub max_samples: Option<usize>,
}

#[derive(Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Trained model; without one, an untrained codebook model is used.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Write the payload here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Dump the binarized image as PBM.
    #[arg(long)]
    pub pbm: Option<PathBuf>,
    /// Fit the geometry through four points instead of all patterns.
    #[arg(long)]
    pub no_rgt: bool,
}

#[derive(Args)]
pub struct SessionArgs {
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub no_rgt: bool,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Model files; `ideal` names the untrained codebook model.
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,
    /// Extra runs with `rgt`, `rand` or `accum` turned off.
    #[arg(long, value_delimiter = ',')]
    pub ablate: Vec<String>,
    /// Frames per session.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Side of a random module window corrupted in every frame.
    #[arg(long)]
    pub occlusion: Option<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Threshold file; exit 0 only if every check holds.
    #[arg(long = "assert")]
    pub assertions: Option<PathBuf>,
}

pub struct Globals {
    pub seed: u64,
    pub config: Config,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let g = Globals { seed: config.pick(cli.seed, "seed", 0)?, config };
    match cli.command {
        Command::Encode(a) => commands::encode_cmd(&g, a),
        Command::Render(a) => commands::render_cmd(&g, a),
        Command::Distort(a) => commands::distort_cmd(&g, a),
        Command::Corpus(a) => commands::corpus_cmd(&g, a),
        Command::Train(a) => commands::train_cmd(&g, a),
        Command::Decode(a) => commands::decode_cmd(&g, a),
        Command::Session(a) => commands::session_cmd(&g, a),
        Command::Bench(a) => commands::bench_cmd(&g, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
