//! Process exit codes. These are a stable contract.

use intorder_core::vtests::Decision;
use intorder_core::Error;
use intorder_mc::McError;

pub const ACCEPT: u8 = 0;
pub const REJECT_LOWER: u8 = 10;
pub const REJECT_UPPER: u8 = 11;
/// Bad flags or an invalid configuration.
pub const USAGE: u8 = 64;
/// Input data that cannot be used: ragged, non-numeric, out of domain.
pub const DATA: u8 = 65;
/// Input file missing.
pub const NO_INPUT: u8 = 66;
/// A numerical failure such as a degenerate variance.
pub const NUMERIC: u8 = 70;
/// Reading or writing files other than the input.
pub const IO: u8 = 74;

pub fn for_decision(d: Decision) -> u8 {
    match d {
        Decision::Accept => ACCEPT,
        Decision::RejectLower => REJECT_LOWER,
        Decision::RejectUpper => REJECT_UPPER,
    }
}

/// An error carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::Parse(_) => USAGE,
            Error::Data { .. } | Error::Domain(_) | Error::Dimension(_) | Error::EmptyPanel(_) | Error::Csv(_) => DATA,
            Error::BandwidthTooLarge { .. } => DATA,
            Error::DegenerateVariance(_) | Error::NoConvergence(_) | Error::NotSymmetric { .. } => NUMERIC,
            Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => NO_INPUT,
            Error::Io(_) | Error::Cache(_) | Error::Json(_) => IO,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<McError> for Failure {
    fn from(e: McError) -> Self {
        match e {
            McError::Core(inner) => inner.into(),
            McError::Spec(_) | McError::Pool(_) => Self { code: USAGE, message: e.to_string() },
            McError::Io(_) | McError::Csv(_) | McError::Json(_) => Self { code: IO, message: e.to_string() },
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: IO, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self { code: IO, message: e.to_string() }
    }
}
