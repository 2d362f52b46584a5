use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gridstack_cli::{run, Command, RunFlags};

#[derive(Debug, Parser)]
#[command(name = "gridstack", version, about = "Leader-follower energy trading studies")]
struct Args {
    command: Command,

    /// Scenario file (TOML).
    scenario: PathBuf,

    /// Output directory for the CSV reports.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// First random seed; overrides the file.
    #[arg(long)]
    seed: Option<u64>,

    /// Price sweep step in c/kWh; overrides the file.
    #[arg(long)]
    step: Option<f64>,

    /// Number of consecutive seeds to run and average.
    #[arg(long, default_value_t = 1)]
    seeds: usize,

    /// Sell energy the facility does not buy to the grid instead of curtailing it.
    #[arg(long)]
    excess_to_grid: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let flags = RunFlags {
        seed: args.seed,
        step: args.step,
        seeds: args.seeds,
        excess_to_grid: args.excess_to_grid,
    };
    match run(args.command, &args.scenario, &args.out, &flags) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: one or more checks failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
