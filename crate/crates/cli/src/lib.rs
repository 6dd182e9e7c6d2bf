//! Command-line front end for `affmf`: configuration loading, subcommands
//! and CSV/JSON emission.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use commands::{Cli, Command};
pub use config::{load, LoadedSystem, SystemConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANALYSIS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let threads = match cli.threads.or_else(env_threads) {
        Some(0) => {
            let _ = writeln!(err, "error: thread count must be positive");
            return EXIT_INPUT;
        }
        t => t,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ANALYSIS;
        }
    };
    // buffered so the work can move onto the pool
    let (code, stdout, stderr) = pool.install(|| {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = commands::dispatch(&cli.command, &mut o, &mut e);
        (code, o, e)
    });
    let _ = out.write_all(&stdout);
    let _ = err.write_all(&stderr);
    code
}

fn env_threads() -> Option<usize> {
    std::env::var("AFFMF_THREADS").ok()?.trim().parse().ok()
}
