use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hsx::config::{load_config, ExperimentKind, Overrides};
use hsx::io::ErrorEnvelope;

/// Conservative Hunter-Saxton solver and stability-metric toolbox.
#[derive(Parser)]
#[command(name = "hsx", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario and write Lagrangian/Eulerian snapshots.
    Simulate(CommonArgs),
    /// Distance upper bound between two states.
    Metric(CommonArgs),
    /// Stability certificate over seeded random pairs.
    Lipschitz(CommonArgs),
    /// Convergence study against a closed-form solution.
    Converge(CommonArgs),
    /// Class membership and round-trip diagnostics for one state.
    Validate(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Grid node count (overrides the config).
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Comma-separated output times (overrides the config).
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::Metric(a) => (ExperimentKind::Metric, a),
        Command::Lipschitz(a) => (ExperimentKind::Lipschitz, a),
        Command::Converge(a) => (ExperimentKind::Converge, a),
        Command::Validate(a) => (ExperimentKind::Validate, a),
    };
    let overrides = Overrides {
        out: args.out.clone(),
        seed: args.seed,
        grid_n: args.grid_n,
        times: args.times.clone(),
    };
    match load_config(&args.config, kind, &overrides).and_then(|c| hsx::run::run(&c)) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let envelope = ErrorEnvelope::from_error(&e);
            eprintln!(
                "{}",
                serde_json::to_string(&envelope)
                    .unwrap_or_else(|_| format!("{{\"error\":{{\"message\":\"{e}\"}}}}"))
            );
            ExitCode::FAILURE
        }
    }
}
