//! Command-line workflows over `lsqbench-core`: preprocess raw tables, fit and
//! compare the solvers, and generate synthetic datasets.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error,
//! 3 every requested solver failed.

pub mod args;
pub mod commands;
pub mod error;
pub mod evaluate;
pub mod report;
pub mod synth;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use error::{CliError, ExitCode};

/// Parses `argv`, runs the command and returns the process exit code.
/// Diagnostics go to `stderr`, summaries to `stdout`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => ExitCode::Usage as i32,
            };
        }
    };
    match commands::dispatch(cli.command, stdout, stderr) {
        Ok(code) => code as i32,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code() as i32
        }
    }
}
