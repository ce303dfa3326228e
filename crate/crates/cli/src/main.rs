use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tubelab_cli::config::load;
use tubelab_cli::*;

#[derive(Parser)]
#[command(name = "tubelab", version, about = "Stability, amplitude equations, flows and continuation of periodic Helfrich tubes")]
struct Cli {
    /// JSON run configuration; defaults apply to every omitted field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Neutral curves and the stable λ₂ window of the straight tube.
    Stability,
    /// Amplitude-equation coefficients and coil/buckle classification.
    Ae,
    /// Tube mesh with curvature fields.
    Mesh,
    /// Area- and volume-conserving flow from a perturbed steady state.
    Flow,
    /// Trivial-branch continuation, bifurcation points and switched branches.
    Continue,
    /// Onset slope of a continued branch against the amplitude equation.
    Compare,
}

fn run(cli: &Cli) -> Result<String> {
    let ctx = Ctx { out: cli.out.clone(), seed: cli.seed, verbose: cli.verbose };
    let path = cli.config.as_deref();
    match cli.command {
        Command::Stability => cmd_stability(&load(path)?, &ctx),
        Command::Ae => cmd_ae(&load(path)?, &ctx),
        Command::Mesh => cmd_mesh(&load(path)?, &ctx),
        Command::Flow => cmd_flow(&load(path)?, &ctx),
        Command::Continue => cmd_continue(&load(path)?, &ctx),
        Command::Compare => cmd_compare(&load(path)?, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
