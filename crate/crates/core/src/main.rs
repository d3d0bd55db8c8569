use clap::builder::PossibleValuesParser;
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

use partconn::cli::{emit_report, run_scenario, Format, ScenarioConfig, SCENARIOS};
use partconn::Tolerances;

/// Runs a verification scenario and writes its report.
#[derive(Debug, Parser)]
#[command(name = "partconn", version)]
struct Args {
    #[arg(long, value_parser = PossibleValuesParser::new(SCENARIOS))]
    scenario: String,
    #[arg(long, default_value_t = ScenarioConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = Tolerances::default().rank)]
    tol_rank: f64,
    #[arg(long, default_value_t = Tolerances::default().eq)]
    tol_eq: f64,
    #[arg(long, default_value_t = Tolerances::default().structure)]
    tol_struct: f64,
    #[arg(long, default_value_t = Tolerances::default().fd_step)]
    fd_step: f64,
    /// Overrides every per-check sample count.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = PossibleValuesParser::new(["json", "text"]))]
    format: String,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let format: Format = match args.format.parse() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("partconn: {e}");
            return ExitCode::from(2);
        }
    };
    let config = ScenarioConfig {
        scenario: args.scenario,
        seed: args.seed,
        tolerances: Tolerances {
            rank: args.tol_rank,
            eq: args.tol_eq,
            structure: args.tol_struct,
            fd_step: args.fd_step,
            ..Tolerances::default()
        },
        samples: args.samples,
        out: args.out.as_ref().map(|p| p.display().to_string()),
        format,
    };
    let report = match run_scenario(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("partconn: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit_report(&report, args.out.as_deref(), format) {
        eprintln!("partconn: {e}");
        return ExitCode::from(3);
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
