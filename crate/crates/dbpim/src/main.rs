use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dbpim::commands::{self, CompileArgs, QuantizeArgs, ReportArgs, SimulateArgs, VerifyArgs};

/// Dyadic-block PIM toolchain: quantize, compile, simulate, report, verify.
///
/// Exit status: 0 success, 1 other failure or verification mismatch,
/// 2 parse error, 3 shape error, 4 capacity error.
/// Log verbosity is read from DBPIM_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "dbpim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate a weight tensor and write thresholds and block metadata.
    Quantize(QuantizeArgs),
    /// Map a layer onto the macro and emit its metadata and instructions.
    Compile(CompileArgs),
    /// Run layers through the cycle model and write a run report.
    Simulate(SimulateArgs),
    /// Compare a dbpim and a dense run report: speedup, energy, utilization.
    Report(ReportArgs),
    /// Check the simulator against the reference dot product.
    Verify(VerifyArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DBPIM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Quantize(a) => commands::quantize(a),
        Command::Compile(a) => commands::compile(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Report(a) => commands::report(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
