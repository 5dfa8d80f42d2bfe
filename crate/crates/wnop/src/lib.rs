//! File formats, reports, parallel sweeps and the command line for the
//! `wnop-core` model.

pub mod cli;
pub mod mapping_file;
pub mod report;
pub mod settings;
pub mod sweep;
pub mod workload_file;

pub use wnop_core as core;

/// Directory holding the bundled workloads as workload files.
pub const BUNDLED_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/workloads");
