//! Benchmark harness for the varclust engines: scenario replications of
//! plain K-means, sparse K-means and RD-MCM, CSV ingestion, and the result
//! tables written by the `varclust` command.

pub mod config;
pub mod data;
pub mod error;
pub mod output;
pub mod run;

pub use config::{DataSource, Method, RunConfig, DESK_REPLICATES};
pub use error::{BenchError, Result};
pub use run::{run_benchmark, BenchReport, ResultRow, SummaryRow};
