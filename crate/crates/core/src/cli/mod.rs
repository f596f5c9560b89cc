//! The `scn` command-line tool.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 validation (including a failed
//! manifest reproduction).

mod commands;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::committee::CommitteeError;
use crate::degrade::DegradeError;
use crate::image::ImageError;
use crate::metrics::MetricError;
use crate::tinynet::NetError;
use crate::trainer::TrainError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        match e {
            ImageError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation(e.to_string())
            }
        })*
    };
}

validation_from!(CommitteeError, DegradeError, MetricError, TrainError);

#[derive(Debug, Parser)]
#[command(
    name = "scn",
    version,
    about = "Test-time self-committees for image restoration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add Gaussian noise or build a super-resolution input.
    Degrade(DegradeArgs),
    /// Train the tiny denoising network on a directory of clean images.
    Train(TrainArgs),
    /// Restore one image with a committee.
    Restore(RestoreArgs),
    /// PSNR table over matching clean/degraded directories.
    Evaluate(EvaluateArgs),
    /// Dump the feature maps of one network layer.
    Features(FeaturesArgs),
    /// Write seeded synthetic texture images.
    Synth(SynthArgs),
    /// Re-run a command from its manifest and check the output hashes.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Noise std on the 0-255 scale.
    #[arg(long, conflicts_with = "scale", required_unless_present = "scale")]
    pub sigma: Option<f64>,
    /// Downscale factor (2, 3 or 4) for super-resolution inputs.
    #[arg(long)]
    pub scale: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Raw f32 output; a PGM preview is written next to it.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = 25.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 2000)]
    pub patches_per_epoch: usize,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f32,
    #[arg(long, default_value_t = 17)]
    pub patch_size: usize,
    #[arg(long)]
    pub out_model: PathBuf,
    #[arg(long)]
    pub augment_fr: bool,
}

#[derive(Debug, Args)]
#[group(id = "base", required = true, multiple = false, args = ["model", "filter"])]
pub struct RestorerArgs {
    /// SCNW weight file for the tiny network.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Reference filter: identity, gaussian, box or shift.
    #[arg(long)]
    pub filter: Option<String>,
}

#[derive(Debug, Args)]
pub struct RestoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub base: RestorerArgs,
    /// none, f, r, fr, i, full or l (or the scn-* forms).
    #[arg(long, default_value = "none")]
    pub committee: String,
    #[arg(long)]
    pub output: PathBuf,
    /// Directory that receives one raw file per member estimate.
    #[arg(long)]
    pub dump_members: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub clean_dir: PathBuf,
    #[arg(long)]
    pub degraded_dir: PathBuf,
    #[command(flatten)]
    pub base: RestorerArgs,
    /// Comma-separated committee names.
    #[arg(long, value_delimiter = ',', default_value = "none")]
    pub committees: Vec<String>,
    /// Label for the setting column, e.g. "sigma25" or "x2".
    #[arg(long, default_value = "-")]
    pub setting: String,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub layer: usize,
    /// Feed 1 - input instead of the input.
    #[arg(long)]
    pub invert: bool,
    #[arg(long)]
    pub outdir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub outdir: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

/// Parses `args` (without the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = Cli::try_parse_from(std::iter::once("scn".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    commands::dispatch(cli.command, &argv)
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let args: Vec<OsString> = std::env::args_os().skip(1).collect();
    // help and version go through clap's own printer
    if let Err(e) =
        Cli::try_parse_from(std::iter::once(OsString::from("scn")).chain(args.iter().cloned()))
    {
        let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        let _ = e.print();
        return code;
    }
    match run_args(args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("scn: {e}");
            e.exit_code()
        }
    }
}
