//! Command-line front end for the footprint engine: dataset ingestion,
//! training, rendering, export and the two agent demos.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod demos;
pub mod idx;
pub mod pgm;

use fpeng::Error;

/// Process exit status for an error. Usage errors reported by the argument
/// parser exit with 2.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 3,
        Error::Format(_) | Error::Version { .. } => 4,
        Error::Validation { .. } => 5,
        Error::NoMatch(_) => 6,
        Error::Argument(_) | Error::Lookup { .. } | Error::Dimension { .. } => 7,
    }
}

pub const EXIT_NO_MATCH: u8 = 6;
