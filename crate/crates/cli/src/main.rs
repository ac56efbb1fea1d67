//! `foresee`: batch workflows over depth-estimation dataset directories.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 usage error, 3 malformed
//! input (labels, calibration, logits, PNG, config), 4 shape mismatch,
//! 5 missing sample, 6 invalid parameter or failed training.

mod analyze;
mod common;
mod evaluate;
mod merge;
mod pointcloud;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "foresee", version, about = "Foreground/background-aware monocular depth toolkit")]
struct Cli {
    /// Worker threads for per-sample work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Directory that relative dataset paths are resolved against.
    #[arg(long, global = true, env = "FORESEE_DATA_ROOT")]
    root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score predicted depth maps against ground truth per region.
    Evaluate(evaluate::Args),
    /// Depth-value or depth-gradient distributions of a dataset.
    Analyze(analyze::Args),
    /// Back-project depth maps into pseudo-LiDAR point clouds.
    ToPointcloud(pointcloud::Args),
    /// Fuse foreground- and background-branch logits.
    Merge(merge::Args),
    /// Run a synthetic training experiment.
    TrainToy(train::Args),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(common::exit::FAILURE);
        }
    }
    let root = cli.root.as_deref();
    let result = match cli.command {
        Command::Evaluate(a) => evaluate::run(a, root),
        Command::Analyze(a) => analyze::run(a, root),
        Command::ToPointcloud(a) => pointcloud::run(a, root),
        Command::Merge(a) => merge::run(a),
        Command::TrainToy(a) => train::run(a),
    };
    match result {
        Ok(()) => ExitCode::from(common::exit::SUCCESS),
        Err(e) => {
            eprintln!("error: {e:#}");
            common::exit_code(&e)
        }
    }
}
