use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use desktwin_cli::{compare_runs, run_scenario, CompareError, Overrides, RunError};

/// Desk-scale digital twin runner.
#[derive(Parser)]
#[command(name = "desktwin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (sim-only, track, or plan mode).
    Run {
        /// Scenario file path.
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run exactly this many frames instead of the scenario duration.
        #[arg(long)]
        frames: Option<usize>,
        /// Dump twin/truth P6 pixmaps every STRIDE frames (track mode).
        #[arg(long, value_name = "STRIDE")]
        dump_images: Option<usize>,
        /// Override the scenario's mode (track | plan | sim-only).
        #[arg(long, value_name = "OVERRIDE")]
        mode: Option<String>,
    },
    /// Compare the aggregate metrics of two run output directories.
    Compare {
        /// Output directory of run A.
        a: PathBuf,
        /// Output directory of run B (the baseline).
        b: PathBuf,
        /// Improvement factor worth flagging.
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap usage/parse problems are validation errors
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match cli.command {
        Command::Run { scenario, seed, out, frames, dump_images, mode } => {
            let overrides = Overrides { seed, out_dir: out, frames, mode, dump_images };
            match run_scenario(&scenario, &overrides) {
                Ok(report) => {
                    print!("{}", summary_line(&report));
                    ExitCode::SUCCESS
                }
                Err(e @ RunError::Scenario(_)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Compare { a, b, factor } => match compare_runs(&a, &b, factor) {
            Ok(deltas) => {
                println!("metric,a,b,ratio,flag");
                for d in &deltas {
                    println!(
                        "{},{:.6e},{:.6e},{:.4},{}",
                        d.metric,
                        d.a,
                        d.b,
                        d.ratio,
                        if d.improved_by_factor { format!("improved>={factor}x") } else { String::new() }
                    );
                }
                ExitCode::SUCCESS
            }
            Err(e @ (CompareError::MismatchedScenario(_) | CompareError::Malformed(_))) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}

fn summary_line(report: &desktwin_cli::RunReport) -> String {
    let mut s = format!(
        "{} [{}]: {} frames, {} episodes\n",
        report.scenario_name,
        report.mode,
        report.frames.len(),
        report.final_errors.len()
    );
    for (name, mean, std) in report.aggregates() {
        s.push_str(&format!("  {name}: {mean:.6} +/- {std:.6}\n"));
    }
    s
}
