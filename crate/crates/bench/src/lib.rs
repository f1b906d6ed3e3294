//! Benchmark harness for the PDSG solver: configuration, instance files, cached reference
//! solutions, multi-seed runs and CSV output. The `pdsg` binary wraps [`cli`].

pub mod cli;
pub mod config;
mod error;
pub mod harness;

pub use error::BenchError;
