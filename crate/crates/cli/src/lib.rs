//! Command-line front end: generators, dimension profiles, measure
//! construction and verification with reproducible file output.

pub mod args;
pub mod commands;
pub mod output;
pub mod real;

use std::fmt;

pub use commands::run;

/// Exit code for an invalid configuration or input document.
pub const EXIT_INVALID_CONFIG: i32 = 2;
/// Exit code for a failed mathematical precondition.
pub const EXIT_PRECONDITION: i32 = 3;
/// Exit code for anything else.
pub const EXIT_OTHER: i32 = 1;

/// A configuration problem detected by the front end itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_INVALID_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<doubling_core::Error>() {
            return if e.is_precondition_failure() {
                EXIT_PRECONDITION
            } else {
                EXIT_INVALID_CONFIG
            };
        }
    }
    EXIT_OTHER
}
