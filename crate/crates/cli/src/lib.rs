//! Command-line frontend for `sockdiv`: JSON instance files, subcommands
//! over every library operation, and self-checking run reports.

pub mod commands;
pub mod format;
pub mod report;

pub use commands::{run_subcommand, Execution, EXIT_INTERNAL, EXIT_INVALID, EXIT_NO_DIVIDER, EXIT_OK};
pub use format::{emit, parse_instance, FileError, InstanceFile};
pub use report::{reverify, RunReport};
