use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nanorod::cli_io::{configure_threads, load_config, run, Subcommand};

#[derive(Clone, Copy, ValueEnum)]
enum Command {
    Spectrum,
    Scatter,
    Asymptotic,
    ResonanceSweep,
    Validate,
}

/// Boundary-integral scattering and resonance diagnostics for a thin nanorod.
///
/// The worker thread count can be set with NANOROD_THREADS.
#[derive(Parser)]
#[command(version)]
struct Cli {
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config, defaults to the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sub = match cli.command {
        Command::Spectrum => Subcommand::Spectrum,
        Command::Scatter => Subcommand::Scatter,
        Command::Asymptotic => Subcommand::Asymptotic,
        Command::ResonanceSweep => Subcommand::ResonanceSweep,
        Command::Validate => Subcommand::Validate,
    };
    let result = configure_threads().and_then(|_| load_config(&cli.config)).and_then(|config| {
        let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("."));
        run(&config, sub, &out)
    });
    match result {
        Ok(report) => {
            println!("{}", report.csv.display());
            println!("{}", report.json.display());
            for p in &report.plots {
                println!("{}", p.display());
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("nanorod: a validation check failed; see {}", report.json.display());
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("nanorod: {err}");
            ExitCode::FAILURE
        }
    }
}
