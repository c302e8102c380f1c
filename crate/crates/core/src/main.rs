use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curvemoments::runner::{emit_plot_data, oracle_suite, run_file, WORKERS_ENV};

/// Moment, decoupling and Strichartz experiments on lattice exponential sums.
#[derive(Parser)]
#[command(name = "curvemoments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (JSON); writes the CSV and `<stem>.summary.json`.
    Run { config: PathBuf },
    /// Emit two-column plot data from a results CSV.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        loglog: bool,
        /// Also write an SVG line plot here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a built-in oracle suite (`all` for every suite).
    Oracle { suite: String },
}

const EXIT_MISMATCH: u8 = 1;
const EXIT_INVALID: u8 = 2;

fn configure_workers() -> Result<(), String> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{WORKERS_ENV}={raw:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INVALID);
    }
    match cli.command {
        Command::Run { config } => match run_file(&config) {
            Ok(summary) => {
                println!(
                    "{} rows -> {}{}",
                    summary.rows,
                    summary.csv.display(),
                    summary.slope.map(|s| format!(" (slope {s:.6})")).unwrap_or_default()
                );
                if summary.all_passed {
                    ExitCode::SUCCESS
                } else {
                    eprint!("{}", summary.failure_report());
                    ExitCode::from(EXIT_MISMATCH)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INVALID)
            }
        },
        Command::Plot { csv, x, y, loglog, svg } => {
            let result = fs::read_to_string(&csv)
                .map_err(curvemoments::Error::from)
                .and_then(|text| emit_plot_data(&text, &x, &y, loglog))
                .and_then(|plot| {
                    if let Some(path) = &svg {
                        fs::write(path, plot.to_svg())?;
                    }
                    Ok(plot)
                });
            match result {
                Ok(plot) => {
                    print!("{}", plot.to_text());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_INVALID)
                }
            }
        }
        Command::Oracle { suite } => match oracle_suite(&suite) {
            Ok(checks) => {
                for c in &checks {
                    println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
                if checks.iter().all(|c| c.passed) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_MISMATCH)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INVALID)
            }
        },
    }
}
