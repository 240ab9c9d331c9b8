use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use wml::{oracle_discrepancy, run_experiment, CliError, ConfigFile};

#[derive(Parser)]
#[command(name = "wml", about = "Numerical laboratory for polynomial exponential sums", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Thread-pool size (0 = default); also settable via WML_THREADS.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory for summary.json and CSV files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independent reference computations for cross-checks.
    Oracle {
        #[command(subcommand)]
        what: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Brute-force extreme discrepancy of a one-value-per-line sequence file.
    Discrepancy { file: PathBuf },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wml: {e}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode, CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, threads, out } => {
            let text = std::fs::read_to_string(&config)?;
            let mut cfg = ConfigFile::parse(&text)?;
            if let Some(s) = seed {
                cfg.experiment.seed = Some(s);
            }
            let out_dir = out
                .or_else(|| cfg.output.dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let output = run_experiment(&cfg, threads)?;
            std::fs::create_dir_all(&out_dir)?;
            let summary_path = out_dir.join("summary.json");
            std::fs::write(&summary_path, output.summary_bytes())?;
            for (name, bytes) in &output.csv_files {
                std::fs::write(out_dir.join(name), bytes)?;
            }
            print!("{}", String::from_utf8_lossy(&output.summary_bytes()));
            if output.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("wml: bound check failed (summary written to {})", summary_path.display());
                Ok(ExitCode::from(2))
            }
        }
        Command::Oracle { what } => match what {
            OracleCommand::Discrepancy { file } => {
                let v = oracle_discrepancy(&file)?;
                println!("{v:?}");
                Ok(ExitCode::SUCCESS)
            }
        },
    }
}
