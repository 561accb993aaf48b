//! Synthetic data and the recall benchmark.

mod bench;
mod synth;

pub use bench::{
    default_t_grid, parse_config_text, run_bench, write_summary_csv, BenchConfig, BenchReport,
    DataFormat, SummaryRow, Timing, Variant, PAIRED_DEFAULTS, SUMMARY_HEADER,
};
pub use synth::{synth_dataset, synth_queries, NormProfile};

use thiserror::Error;

use crate::index::IndexError;
use crate::query::QueryError;
use crate::vecdata::DataError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
