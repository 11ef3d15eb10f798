use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

use commands::{CliError, Context};

/// Trains and evaluates variational autoencoders for quantum channels.
#[derive(Debug, Parser)]
#[command(name = "channelpress", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory that receives every output file.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Estimates overlaps from this many measurement shots.
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Debug, Clone, clap::Args)]
struct CheckArgs {
    /// Optional config; only its seed is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Accepted for flag uniformity; the suites are exact.
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the encoder pair on the configured dataset.
    Train(CommonArgs),
    /// Compress each dataset channel with a trained model.
    Compress(CommonArgs),
    /// Compress then reconstruct each channel and report fidelities.
    Reconstruct(CommonArgs),
    /// Upper bound on reconstruction fidelity for each channel.
    Bound(CommonArgs),
    /// Compare plain and noise-assisted reconstruction.
    Nqcae(CommonArgs),
    /// Dimension-reduction run; appends a row to results.csv.
    Dimred(CommonArgs),
    /// Anomaly detection with fresh normal and abnormal test circuits.
    Anomaly(CommonArgs),
    /// Two-parameter slice of the loss surface.
    Landscape(CommonArgs),
    /// Write the configured dataset to dataset.json.
    GenData(CommonArgs),
    /// Run the randomized invariant suites.
    Check(CheckArgs),
}

fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var("CHANNELPRESS_THREADS") {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "CHANNELPRESS_THREADS must be a non-negative integer, got {v:?}"
            ))
        }),
        _ => Ok(0),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = threads_from_env()?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let (name, args) = match cli.command {
        Command::Check(a) => {
            return commands::check(a.config.as_deref(), &a.out, a.seed, threads);
        }
        Command::Train(a) => ("train", a),
        Command::Compress(a) => ("compress", a),
        Command::Reconstruct(a) => ("reconstruct", a),
        Command::Bound(a) => ("bound", a),
        Command::Nqcae(a) => ("nqcae", a),
        Command::Dimred(a) => ("dimred", a),
        Command::Anomaly(a) => ("anomaly", a),
        Command::Landscape(a) => ("landscape", a),
        Command::GenData(a) => ("gen-data", a),
    };
    let ctx = Context::load(name, &args.config, &args.out, args.seed, args.shots, threads)?;
    let result = match name {
        "train" => commands::train(&ctx),
        "compress" => commands::compress(&ctx),
        "reconstruct" => commands::reconstruct(&ctx),
        "bound" => commands::bound(&ctx),
        "nqcae" => commands::nqcae(&ctx),
        "dimred" => commands::dimred(&ctx),
        "anomaly" => commands::anomaly(&ctx),
        "landscape" => commands::landscape(&ctx),
        "gen-data" => commands::gen_data(&ctx),
        _ => unreachable!("every subcommand is listed above"),
    };
    match result {
        Ok(()) => ctx.write_timing(),
        Err(e) => {
            ctx.write_diagnostic(&e);
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
