use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gbs_cli::{exit_code, load_config, run, verify, Stage};

#[derive(Parser)]
#[command(
    name = "gbs-cli",
    version,
    about = "Desk-scale lossy Gaussian boson sampling laboratory"
)]
struct Cli {
    /// Global bound on worker threads (stages are sequential; recorded in
    /// the manifest).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unroll the circuit into its transfer matrix.
    Unroll {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute the ground-truth Gaussian state.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Draw the configured sampler batches.
    Sample {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the MPS pipeline (decompose, build, sample).
    Mps {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the validation battery on the drawn batches.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit χ(ε) and estimate classical runtime.
    Cost {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-validate a persisted sample file against the config.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        samples: PathBuf,
    },
    /// Run the full pipeline and aggregate everything into report.json.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config_path, action): (&PathBuf, Stage) = match &cli.command {
        Command::Unroll { config } => (config, Stage::Unroll),
        Command::Simulate { config } => (config, Stage::Simulate),
        Command::Sample { config } => (config, Stage::Sample),
        Command::Mps { config } => (config, Stage::Mps),
        Command::Validate { config } => (config, Stage::Validate),
        Command::Cost { config } => (config, Stage::Cost),
        Command::Report { config } => (config, Stage::Report),
        Command::Verify { config, samples } => {
            return match load_config(config).and_then(|loaded| verify(&loaded, samples)) {
                Ok(report) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report).expect("report serializes")
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code(&e) as u8)
                }
            };
        }
    };
    match load_config(config_path).and_then(|loaded| run(&loaded, action, cli.threads)) {
        Ok(out) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&out.summary).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
