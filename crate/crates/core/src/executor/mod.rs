//! In-memory execution of hash-join plans with runtime bitvector filters,
//! synthetic data generation, exact cardinalities and the filter break-even
//! micro-benchmark.

mod bench;
mod bitvector;
mod datagen;
mod exact;
mod exec;
mod table;

use thiserror::Error;

pub use bench::{breakeven_benchmark, BenchConfig, BenchReport, BenchRow};
pub use bitvector::{BloomFilter, RuntimeBitvector};
pub use datagen::{generate_data, generate_snowflake_data};
pub use exact::{exact_provider, ExactProvider};
pub use exec::{
    execute, tuple_breakdown, ExecMetrics, ExecOptions, ExecResult, OperatorClass,
    OperatorMetrics, TupleBreakdown,
};
pub use table::{Dataset, Table};

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("no table for relation `{0}`")]
    MissingTable(String),
    #[error("table `{table}` has no column `{column}`")]
    MissingColumn { table: String, column: String },
    #[error("table `{table}` row {row} has {found} values, expected {expected}")]
    RowWidth {
        table: String,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("table `{0}` has duplicate key values")]
    DuplicateKey(String),
    #[error("infeasible data request: {0}")]
    Infeasible(String),
}
