//! Library half of the `ctxreward` command-line tool.
//!
//! The binary is a thin wrapper around [`main_with`]; other hosts can call
//! [`commands::score_reviews`] and [`commands::score_group`] directly.

pub mod args;
pub mod backends;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::Cli;
pub use commands::run;
pub use error::CliError;

/// Parses `argv`, runs the command and returns the process exit code.
/// Help and version text go to `stdout`; diagnostics go to `stderr`.
pub fn main_with<I, T>(argv: I, env: Vec<(String, String)>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let text = err.render().to_string();
            return if err.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                error::EXIT_INPUT
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    match run(cli, env, stdout) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "ctxreward: {err}");
            err.exit_code()
        }
    }
}
