//! IO and command-line front end for `hetforce-core`: config files, the
//! experiments behind each subcommand, and their CSV, JSON and gnuplot
//! artifacts.

pub mod checks;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;

pub use cli::{Experiment, RunConfig};
pub use config::ConfigError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Parses `args`, runs the experiment, writes its artifacts and returns
/// the process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match cli::parse_args(args) {
        Ok(Ok(cfg)) => cfg,
        Ok(Err(text)) => {
            print!("{text}");
            return EXIT_OK;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out_dir) {
        eprintln!("error: output directory {}: {e}", cfg.out_dir.display());
        return EXIT_CONFIG;
    }
    for w in cfg.params.warnings() {
        eprintln!("warning: {w}");
    }
    let report = experiments::run(&cfg);
    let paths = match output::write_artifacts(&cfg.out_dir, &report, &experiments::context(&cfg)) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: writing artifacts: {e}");
            return EXIT_RUNTIME;
        }
    };
    for path in &paths {
        eprintln!("wrote {}", path.display());
    }
    for c in &report.checks {
        eprintln!("{} {}: {:e} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.condition);
    }
    if let Some(err) = &report.error {
        eprintln!("error: {}", err.message);
        return EXIT_RUNTIME;
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
