//! Command-line workflow around `metasolve`: sweeps over solver spaces,
//! results files, Pareto fronts, preference ranking and weight
//! rediscovery.

use std::path::PathBuf;

pub mod config;
pub mod report;
pub mod results;
pub mod sweep;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config {path}: {message}")]
    Config { path: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}: {message}", path.display())]
    Results { path: PathBuf, line: usize, message: String },
    #[error("results were produced by config {file}, not by the supplied config {config}")]
    HashMismatch { file: String, config: String },
    #[error(transparent)]
    Solver(#[from] metasolve::Error),
}
