use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use rca_cli::{load_scenario, output, run, Command, Flags, Format};

/// Verify conditional risk and convex-analysis properties on a scenario file.
#[derive(Debug, Parser)]
#[command(name = "rca", version)]
struct Args {
    command: Command,
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the comparison tolerance of value checks.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Enumeration budget for hull vertices and sweep cap for ascent.
    #[arg(long)]
    budget: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    if let Some(n) = std::env::var("RCA_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()) {
        rca_core::par::init_workers(n);
    }
    let start = Instant::now();
    let result = load_scenario(&args.scenario).and_then(|sc| {
        let flags = Flags {
            seed: args.seed,
            tol: args.tol,
            budget: args.budget,
        };
        run(args.command, &sc, &flags)
    });
    match result {
        Ok(outcome) => {
            match args.format {
                Format::Json => println!("{}", output::to_json(&outcome, start.elapsed())),
                Format::Csv => print!("{}", output::to_csv(&outcome)),
            }
            for rec in outcome.records.iter().filter(|r| !r.passed) {
                let note = rec.witnesses.first().map_or("", |w| w.note.as_str());
                eprintln!("FAIL {}: {note}", rec.id);
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
