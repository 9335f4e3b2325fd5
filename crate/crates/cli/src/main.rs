//! Command-line harness for trajectory-space motion prediction.
//!
//! Exit codes: 0 success, 1 verification failure (gradient check), 2
//! configuration error, 3 data or I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trajgcn::data::Repr;
use trajgcn::error::Error;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "trajgcn", version, about = "Trajectory-space motion prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic smooth-motion dataset split into train/val/test
    Synth(SynthCli),
    /// Train a model and write checkpoint, channel mask, and log
    Train(TrainCli),
    /// Evaluate a checkpoint against the zero-velocity baseline per action
    Eval(EvalCli),
    /// Predict the continuation of one sequence file
    Predict(PredictCli),
    /// Verify analytic gradients against central finite differences
    Gradcheck(GradcheckCli),
    /// Reconstruction error as a function of retained DCT coefficients
    DctAnalyze(DctAnalyzeCli),
}

#[derive(Args)]
struct ConfigOpt {
    /// key=value run configuration file; defaults reproduce the published setup
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigOpt {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthCli {
    #[command(flatten)]
    config: ConfigOpt,
    /// Output directory (train/, val/, test/ are created inside)
    #[arg(long)]
    out: PathBuf,
    /// Number of sequences across all splits
    #[arg(long, default_value_t = 32)]
    sequences: usize,
    /// Channels per pose
    #[arg(long, default_value_t = 12)]
    channels: usize,
    /// Frames per sequence
    #[arg(long, default_value_t = 35)]
    frames: usize,
    /// Frame rate written to the headers
    #[arg(long, default_value_t = 25)]
    fps: usize,
    /// Pose representation: expmap or xyz
    #[arg(long, default_value = "xyz")]
    repr: String,
    /// Comma-separated action labels cycled over the sequences
    #[arg(long, default_value = "seq")]
    actions: String,
}

#[derive(Args)]
struct TrainCli {
    #[command(flatten)]
    config: ConfigOpt,
    /// Dataset directory containing train/ (and optionally val/)
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint output path (mask and log derive from it)
    #[arg(long)]
    out: PathBuf,
    /// Log CSV path (default: <out>.log.csv)
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct EvalCli {
    #[command(flatten)]
    config: ConfigOpt,
    /// Trained checkpoint
    #[arg(long)]
    checkpoint: PathBuf,
    /// Channel mask (default: <checkpoint>.mask)
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Dataset directory containing test/
    #[arg(long)]
    data: PathBuf,
    /// Report CSV path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated millisecond horizons (default from config)
    #[arg(long)]
    horizons: Option<String>,
}

#[derive(Args)]
struct PredictCli {
    #[command(flatten)]
    config: ConfigOpt,
    /// Trained checkpoint
    #[arg(long)]
    checkpoint: PathBuf,
    /// Channel mask (default: <checkpoint>.mask)
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Input sequence file (the trailing observed window is used)
    #[arg(long)]
    input: PathBuf,
    /// Output sequence file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckCli {
    #[command(flatten)]
    config: ConfigOpt,
    /// Self-test fixture: perturb the analytic gradients and expect failure
    #[arg(long, hide = true)]
    perturb: bool,
}

#[derive(Args)]
struct DctAnalyzeCli {
    /// Input sequence file
    #[arg(long)]
    input: PathBuf,
    /// Largest coefficient count to test (default: the frame count)
    #[arg(long)]
    max_coeffs: Option<usize>,
    /// CSV output path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) | Error::Shape(_) | Error::State(_) => ExitCode::from(2),
        Error::Data(_) | Error::Io(_) => ExitCode::from(3),
    }
}

fn parse_horizons(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::config(format!("bad horizon '{p}'")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Synth(args) => {
            let cfg = args.config.load()?;
            let actions: Vec<String> =
                args.actions.split(',').map(|a| a.trim().to_string()).collect();
            if actions.iter().any(|a| a.is_empty()) {
                return Err(Error::config("empty action label".to_string()));
            }
            commands::synth::run(&commands::synth::SynthArgs {
                out_dir: &args.out,
                seed: args.config.seed.unwrap_or(cfg.seed),
                sequences: args.sequences,
                channels: args.channels,
                frames: args.frames,
                fps: args.fps,
                repr: Repr::parse(&args.repr)
                    .map_err(|_| Error::config(format!("bad repr '{}'", args.repr)))?,
                actions,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Train(args) => {
            let cfg = args.config.load()?;
            commands::train::run(&commands::train::TrainArgs {
                cfg: &cfg,
                data_dir: &args.data,
                out_checkpoint: &args.out,
                log_path: args.log,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(args) => {
            let cfg = args.config.load()?;
            let horizons = args.horizons.as_deref().map(parse_horizons).transpose()?;
            commands::eval::run(&commands::eval::EvalArgs {
                cfg: &cfg,
                checkpoint: &args.checkpoint,
                mask: args.mask,
                data_dir: &args.data,
                out: args.out,
                horizons,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict(args) => {
            let cfg = args.config.load()?;
            commands::predict::run(&commands::predict::PredictArgs {
                cfg: &cfg,
                checkpoint: &args.checkpoint,
                mask: args.mask,
                input: &args.input,
                out: &args.out,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck(args) => {
            // Without a config the check runs on the reference tiny model;
            // a full-size config would blow the enforced dimension caps.
            let cfg = match &args.config.config {
                Some(_) => args.config.load()?,
                None => {
                    let mut cfg = RunConfig {
                        width: 16,
                        blocks: 2,
                        channels: 6,
                        n_observed: 5,
                        n_future: 5,
                        dct_coeffs: Some(5),
                        ..RunConfig::default()
                    };
                    if let Some(seed) = args.config.seed {
                        cfg.seed = seed;
                    }
                    cfg
                }
            };
            let passed = commands::gradcheck::run(&commands::gradcheck::GradcheckArgs {
                cfg: &cfg,
                perturb: args.perturb,
            })?;
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::DctAnalyze(args) => {
            commands::dct_analyze::run(&commands::dct_analyze::DctAnalyzeArgs {
                input: &args.input,
                max_coeffs: args.max_coeffs,
                out: args.out,
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
