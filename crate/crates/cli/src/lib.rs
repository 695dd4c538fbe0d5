//! Command-line front end for the transactional simulator: scenario files,
//! built-in scenarios, and the `run`, `classify`, `amplitude` and
//! `export-causet` subcommands.

pub mod builtin;
pub mod commands;
pub mod error;
pub mod scenario_file;

use std::io::Write;

use clap::{Parser, Subcommand};

pub use error::CliError;
pub use scenario_file::{parse_scenario, parse_scenario_file, scenario_to_json, ParsedScenario};

#[derive(Debug, Parser)]
#[command(name = "rti-sim", version, about = "Offer/confirmation transaction simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an ensemble and write stats.json, detections.csv and causet.dot.
    Run(commands::RunArgs),
    /// Classify a system of n constituents as micro, meso or macro.
    Classify(commands::ClassifyArgs),
    /// First-order transition amplitude for one set of parameters.
    Amplitude(commands::AmplitudeArgs),
    /// Replay one run and export its causal set.
    ExportCauset(commands::ExportArgs),
}

fn dispatch(cli: &Cli, env_seed: Option<&str>) -> Result<Vec<u8>, CliError> {
    match &cli.command {
        Command::Run(a) => commands::run(a, env_seed).map(String::into_bytes),
        Command::Classify(a) => commands::classify_cmd(a).map(String::into_bytes),
        Command::Amplitude(a) => commands::amplitude_cmd(a).map(String::into_bytes),
        Command::ExportCauset(a) => commands::export_causet(a, env_seed),
    }
}

/// Runs the CLI against explicit streams and returns the exit code.
///
/// Failures print one JSON object to `stderr`; usage errors and rejected
/// input exit with 1, filesystem failures with 2.
pub fn main_with<I, T>(args: I, env_seed: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::Invalid(e.render().to_string().trim().to_string());
            let _ = writeln!(stderr, "{}", err.to_json());
            return err.exit_code();
        }
    };
    match dispatch(&cli, env_seed) {
        Ok(bytes) => {
            let _ = stdout.write_all(&bytes);
            0
        }
        Err(err) => {
            let _ = writeln!(stderr, "{}", err.to_json());
            err.exit_code()
        }
    }
}
