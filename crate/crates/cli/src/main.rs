use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use subcav_cli::{dispatch, CliError, Command, ConfigFile};

#[derive(Parser)]
#[command(name = "subcav", version, about = "Steady and unsteady subglacial cavitation runs")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Sectioned TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for independent sweep chains.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Sub {
    /// Steady cavity for each configured mesh size.
    Steady(RunArgs),
    /// Sliding-law sweep over the effective pressure.
    Sweep(RunArgs),
    /// Oscillating effective pressure at fixed basal shear stress.
    Unsteady(RunArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Steady(a) => (Command::Steady, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Unsteady(a) => (Command::Unsteady, a),
    };
    let result = ConfigFile::load(&args.config)
        .map_err(CliError::from)
        .and_then(|config| dispatch(command, &config, &args.out, args.jobs));
    match result {
        Ok(manifest) => {
            log::info!("wrote {} files to {}", manifest.outputs.len() + 1, args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
