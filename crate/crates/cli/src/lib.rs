//! Experiment runner: configuration, orchestration and reports.

pub mod config;
pub mod runner;

pub use config::{parse_config, resolve, Command, UsageError};
pub use runner::{run, RunRecord};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Exit status for an error raised while running a command. Bad parameter
/// combinations and unreadable inputs count as usage errors.
pub fn exit_code(err: &nagstab_core::Error) -> i32 {
    use nagstab_core::Error::*;
    match err {
        Domain(_) | Precision { .. } | Parse { .. } => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}
