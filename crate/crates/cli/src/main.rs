use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use splat_cli::run;

#[derive(Parser)]
#[command(
    name = "splat",
    version,
    about = "Particle physics with Gaussian-splat rendering: simulate scenes to frame dumps, rasterize them to images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scene and write per-frame dumps plus a manifest.
    Sim {
        /// Scene config (TOML).
        scene: PathBuf,
        /// Number of frames (one solver step each).
        #[arg(long)]
        frames: u64,
        /// Output directory for dumps and the manifest.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render frame dumps to PPM images.
    Render {
        /// Directory produced by `sim`.
        dir: PathBuf,
        /// Camera id from the scene config.
        #[arg(long)]
        camera: String,
        /// Output directory for images.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the anisotropy metric of a kernel asset.
    Metrics {
        /// Kernel asset file.
        kernels: PathBuf,
        /// Axis-ratio threshold.
        #[arg(long, default_value_t = splat_cli::config::DEFAULT_ANISO_THRESHOLD)]
        aniso: f64,
    },
    /// Run the invariant suite against a scene config.
    Validate {
        /// Scene config (TOML).
        scene: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();

    if let Ok(threads) = std::env::var("SPLAT_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .ok();
            }
            _ => log::warn!("ignoring invalid SPLAT_THREADS={threads:?}"),
        }
    }

    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sim { scene, frames, out } => run::run_sim(&scene, frames, &out),
        Command::Render { dir, camera, out } => run::run_render(&dir, &camera, &out),
        Command::Metrics { kernels, aniso } => run::run_metrics(&kernels, aniso),
        Command::Validate { scene } => match run::run_validate(&scene) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("validation failed");
                return ExitCode::FAILURE;
            }
            Err(e) => Err(e),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
