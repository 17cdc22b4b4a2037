//! Command-line plumbing: configuration, run records and the subcommands.

pub mod commands;
pub mod config;
pub mod record;

pub use commands::{cmd_baseline, cmd_eval, cmd_index, cmd_map};
pub use config::RunConfig;
pub use record::RunRecord;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// A problem with how the tool was invoked or configured (exit code 2).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Exit code for a failed command: usage errors anywhere in the chain map
/// to 2, everything else to 1.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err
        .chain()
        .any(|e| e.downcast_ref::<UsageError>().is_some())
    {
        EXIT_USAGE
    } else {
        EXIT_RUNTIME
    }
}
