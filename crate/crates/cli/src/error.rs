// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exit-code classification.

use std::fmt;

use gkcp_bench::BenchError;

/// Success.
pub const EXIT_OK: u8 = 0;
/// I/O failures and anything unclassified.
pub const EXIT_OTHER: u8 = 1;
/// Malformed or unusable input data.
pub const EXIT_DATA: u8 = 2;
/// Invalid or inconsistent configuration.
pub const EXIT_CONFIG: u8 = 3;

#[derive(Debug)]
pub struct DataError(pub String);

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}
impl std::error::Error for ConfigError {}

fn core_code(e: &gkcp::Error) -> u8 {
    use gkcp::Error::*;
    match e {
        TooFewObservations { .. }
        | RaggedRows { .. }
        | NonFiniteValue { .. }
        | AllPointsIdentical
        | NonFiniteKernel { .. }
        | AsymmetricKernel { .. }
        | ZeroVariance { .. } => EXIT_DATA,
        InvalidBandwidth(_) | DegenerateSplit { .. } | InvalidBounds { .. } | InvalidConfig(_) => {
            EXIT_CONFIG
        }
    }
}

/// Exit code for the first classifiable error in the chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<DataError>() {
            return EXIT_DATA;
        }
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<gkcp::Error>() {
            return core_code(e);
        }
        if let Some(e) = cause.downcast_ref::<BenchError>() {
            return match e {
                BenchError::InvalidSpec(_) | BenchError::InvalidConfig(_) => EXIT_CONFIG,
                BenchError::Core(c) => core_code(c),
                _ => EXIT_OTHER,
            };
        }
    }
    EXIT_OTHER
}
