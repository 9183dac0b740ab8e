use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use widomlab::experiment::{run_experiment, show_solution, ExitStatus, ExperimentConfig};

/// Chebyshev polynomials and Widom minimizers on finite-gap subsets of the real line.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Write artifacts here instead of the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the stored record for one degree of a finished run.
    Show { dir: PathBuf, n: usize },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn exit(status: ExitStatus) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                exit(ExitStatus::Ok)
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                exit(ExitStatus::Validation)
            }
        },
        Command::Run { config, out } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return exit(ExitStatus::Validation);
                }
            };
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let report = run_experiment(&cfg, &dir);
            for s in &report.suites {
                let tag = match (s.pass, s.informational) {
                    (true, _) => "PASS",
                    (false, true) => "INFO",
                    (false, false) => "FAIL",
                };
                println!("[{tag}] {}: {}", s.name, s.detail);
            }
            for e in &report.errors {
                eprintln!("error: {e}");
            }
            println!("{} rows written to {}", report.rows.len(), dir.display());
            exit(report.status)
        }
        Command::Show { dir, n } => match show_solution(&dir, n) {
            Ok(text) => {
                print!("{text}");
                exit(ExitStatus::Ok)
            }
            Err(e) => {
                eprintln!("{e}");
                exit(ExitStatus::Validation)
            }
        },
    }
}
