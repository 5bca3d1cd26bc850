//! `thermoscope`: simulate, analyse and calibrate single-ion images from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input or I/O, 3 numerical
//! failure. Logging is controlled by `THERMOSCOPE_LOG`.

mod analyze;
mod calibrate;
mod common;
mod fit;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use common::{CmdResult, GlobalArgs};

#[derive(Parser, Debug)]
#[command(
    name = "thermoscope",
    version,
    about = "Single trapped-ion thermometry from camera images"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize one camera frame per scan point plus a manifest
    Simulate(simulate::SimulateArgs),

    /// Measure the image width of every frame in a directory
    Analyze(analyze::AnalyzeArgs),

    /// Fit the heating rate and PSF width to a width scan
    FitHeating(fit::FitHeatingArgs),

    /// Magnification or Rabi-frequency calibration
    #[command(subcommand)]
    Calibrate(calibrate::CalibrateCommand),
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Simulate(args) => simulate::run(&cli.global, &args),
        Command::Analyze(args) => analyze::run(&cli.global, &args),
        Command::FitHeating(args) => fit::run(&cli.global, &args),
        Command::Calibrate(cmd) => calibrate::run(&cli.global, &cmd),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("THERMOSCOPE_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
