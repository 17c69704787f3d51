//! `dose`: generate paired data, encode audio to tokens, train per-class
//! extractors, extract one-shots from mixtures and evaluate.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Progress is written to
//! standard error as JSON lines.

mod commands;
mod config;
mod progress;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use dose_core::tokens::MaskCoordinates;
use dose_core::DrumClass;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "dose", version, about = "Drum one-shot extraction from music mixtures", arg_required_else_help = true)]
struct Cli {
    /// TOML run configuration; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker thread cap.
    #[arg(long, global = true, env = "DOSE_THREADS")]
    threads: Option<usize>,

    /// Global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic source library (one-shots and instrument loops).
    SynthLibrary(SynthLibraryArgs),
    /// Generate paired mixtures and one-shots from a source library.
    GenDataset(GenDatasetArgs),
    /// Encode a WAV file to a token file.
    Encode(EncodeArgs),
    /// Decode a token file to a WAV file.
    Decode(DecodeArgs),
    /// Train one per-class extractor on a generated dataset.
    Train(TrainArgs),
    /// Extract one-shots from a mixture with one or more checkpoints.
    Extract(ExtractArgs),
    /// Score checkpoints on a test manifest (MSS and built-in Fréchet distance).
    Eval(EvalArgs),
    /// Write built-in embeddings of WAV files.
    Embed(EmbedArgs),
    /// Fréchet distance between two embedding or statistics files.
    Fad(FadArgs),
    /// Print the effective run configuration as TOML.
    InitConfig(InitConfigArgs),
}

#[derive(Debug, Args)]
struct CodecFlags {
    /// Codec frames per second.
    #[arg(long)]
    frame_rate: Option<u32>,
    /// Number of codebooks K.
    #[arg(long)]
    codebooks: Option<usize>,
    /// Codewords per codebook N.
    #[arg(long)]
    codebook_size: Option<usize>,
}

#[derive(Debug, Args)]
struct SynthLibraryArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 24)]
    oneshots_per_class: usize,
    #[arg(long, default_value_t = 6)]
    loops_per_instrument: usize,
}

#[derive(Debug, Args)]
struct GenDatasetArgs {
    /// Directory with kick/ snare/ hihat/ bass/ piano/ guitar/ vocal/ WAV folders.
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    /// train, val or test.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    codec: CodecFlags,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    codec: CodecFlags,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    class: DrumClass,
    /// Dataset directory containing manifest.jsonl.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// 0 trains the ablation without the onset term.
    #[arg(long)]
    onset_weight: Option<f64>,
    #[arg(long)]
    target_seconds: Option<f64>,
    #[arg(long, value_parser = parse_coords)]
    mask_coordinates: Option<MaskCoordinates>,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    /// Progress line every this many steps.
    #[arg(long, default_value_t = 10)]
    log_every: usize,
    #[command(flatten)]
    codec: CodecFlags,
}

#[derive(Debug, Args)]
struct SamplingFlags {
    /// Sample with this temperature instead of greedy decoding.
    #[arg(long)]
    temperature: Option<f64>,
    /// Restrict sampling to the k most likely tokens (0 keeps all).
    #[arg(long, requires = "temperature")]
    top_k: Option<usize>,
    #[arg(long, conflicts_with = "temperature")]
    greedy: bool,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Checkpoint, or a comma-separated list of per-class checkpoints.
    #[arg(long, value_delimiter = ',', required = true)]
    ckpt: Vec<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    /// Output WAV for one checkpoint; output directory (`<class>.wav`) for several.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    sampling: SamplingFlags,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Test manifest; audio paths resolve against its directory.
    #[arg(long)]
    manifest: PathBuf,
    /// Per-class checkpoints of the system named "dose".
    #[arg(long, value_delimiter = ',')]
    ckpts: Vec<PathBuf>,
    /// Additional system as NAME=ckpt[,ckpt...]; repeatable.
    #[arg(long = "system", value_parser = parse_system)]
    systems: Vec<(String, Vec<PathBuf>)>,
    #[arg(long)]
    out: PathBuf,
    /// Evaluate only the first N records.
    #[arg(long)]
    limit: Option<usize>,
    #[command(flatten)]
    sampling: SamplingFlags,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    /// Embedding rows (one float32 row per file).
    #[arg(long)]
    out: PathBuf,
    /// Also write mean and covariance.
    #[arg(long)]
    stats_out: Option<PathBuf>,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct FadArgs {
    /// Embedding rows, or statistics when the extension is `.stats`.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    generated: PathBuf,
}

#[derive(Debug, Args)]
struct InitConfigArgs {
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_coords(s: &str) -> Result<MaskCoordinates, String> {
    match s {
        "delayed" => Ok(MaskCoordinates::Delayed),
        "frame" => Ok(MaskCoordinates::Frame),
        _ => Err("expected 'delayed' or 'frame'".to_owned()),
    }
}

fn parse_system(s: &str) -> Result<(String, Vec<PathBuf>), String> {
    let (name, list) = s.split_once('=').ok_or("expected NAME=ckpt[,ckpt...]")?;
    if name.is_empty() || list.is_empty() {
        return Err("expected NAME=ckpt[,ckpt...]".to_owned());
    }
    Ok((name.to_owned(), list.split(',').map(PathBuf::from).collect()))
}

/// A failure caused by how the tool was invoked rather than by the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| usage(format!("config {}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli)?;
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::SynthLibrary(a) => commands::synth_library(&cfg, a),
        Command::GenDataset(a) => commands::gen_dataset(cfg, a),
        Command::Encode(a) => commands::encode(cfg, a),
        Command::Decode(a) => commands::decode(cfg, a),
        Command::Train(a) => commands::train(cfg, a),
        Command::Extract(a) => commands::extract(cfg, a),
        Command::Eval(a) => commands::eval(cfg, a),
        Command::Embed(a) => commands::embed(a),
        Command::Fad(a) => commands::fad(a),
        Command::InitConfig(a) => commands::init_config(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
