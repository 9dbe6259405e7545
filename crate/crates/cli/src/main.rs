//! `seqtomo`: state generation, sequential disentanglement by gradient descent
//! or by discrete-gate reinforcement learning, reconstruction, and the
//! benchmark tables.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "seqtomo", version, about = "Sequential disentanglement state tomography")]
struct Cli {
    /// Directory for output files (default: $SEQTOMO_OUTPUT_DIR, else `.`).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// TOML file with flag values, keys spelled like the long flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a random normalized state.
    GenState(GenStateArgs),
    /// Disentangle a state with variational circuits and reconstruct it.
    Vqc(VqcArgs),
    /// Disentangle a state with reinforcement-learned discrete gate sequences.
    Rl(RlArgs),
    /// Rebuild the state described by a vqc or rl record.
    Reconstruct(ReconstructArgs),
    /// Benchmark tables.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args, Debug)]
struct GenStateArgs {
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Haar-random instead of uniform real/imaginary parts.
    #[arg(long)]
    haar: bool,
    /// Output file (default: <output-dir>/state.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Input state: a JSON file, or a random state drawn from the seed.
#[derive(Args, Debug)]
struct StateSource {
    #[arg(long, conflicts_with = "qubits")]
    state: Option<PathBuf>,
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct VqcArgs {
    #[command(flatten)]
    source: StateSource,
    /// Building-block repetitions per qubit.
    #[arg(long)]
    r: Option<usize>,
    /// Stop each sequence once its loss is at most this value.
    #[arg(long, conflicts_with = "precision")]
    tol: Option<f64>,
    /// Stop each sequence once the measured probability reaches this value.
    #[arg(long)]
    precision: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Log loss and purity every this many epochs (0 = off).
    #[arg(long)]
    progress_every: Option<usize>,
}

#[derive(Args, Debug)]
struct RlArgs {
    #[command(flatten)]
    source: StateSource,
    #[arg(long)]
    episode_len: Option<usize>,
    /// Episodes per epoch.
    #[arg(long)]
    dataset: Option<usize>,
    /// Training epochs per qubit.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    reward_stop: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Hidden layer sizes, e.g. `64,64`.
    #[arg(long)]
    hidden: Option<config::IntList>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[arg(long)]
    record: Option<PathBuf>,
    /// Original state; its fidelity with the reconstruction is printed.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Output file (default: <output-dir>/reconstructed.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Gate, parameter and gradient-work table of the sequence circuits.
    Table1(Table1Args),
    /// Reconstruction fidelity against system size and precision target.
    Sweep(SweepArgs),
    /// Gradient work of sequential versus joint training.
    Sgd(SgdArgs),
}

#[derive(Args, Debug)]
struct Table1Args {
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    /// Train on a random state from this seed to fill the epoch columns.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// System sizes, e.g. `2..6`.
    #[arg(long)]
    qubits: Option<config::IntList>,
    /// Precision targets, e.g. `0.99,0.999,0.9999`.
    #[arg(long)]
    precisions: Option<config::RealList>,
    /// Number of seeds per cell.
    #[arg(long)]
    seeds: Option<usize>,
    /// First seed; cells use `seed, seed + 1, …`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct SgdArgs {
    #[arg(long)]
    qubits: Option<usize>,
    /// Repetition counts, e.g. `1..5`.
    #[arg(long)]
    r: Option<config::IntList>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let failure = Failure::usage(e.to_string().trim_end());
            eprintln!("{}", failure.to_json());
            return ExitCode::from(1);
        }
    };

    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Warn
        } else {
            log::LevelFilter::Info
        })
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .init();

    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
