//! Config-driven front end: parse a TOML analysis description, run it, and
//! render the result table.

pub mod config;
pub mod error;
pub mod table;
pub mod tasks;

pub use config::{parse_config, AnalysisConfig, ParsedConfig, Task};
pub use error::CliError;
pub use table::{emit, Cell, Format, Metadata, ResultTable};
pub use tasks::{config_digest, run};

/// Exit status when a report is produced but did not survive the larger
/// Fock truncation.
pub const EXIT_TRUNCATION: u8 = 4;
