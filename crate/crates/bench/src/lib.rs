//! Experiment harness: run specs, seeded sweeps, CSV output and summaries.

pub mod error;
pub mod results;
pub mod run;
pub mod spec;

pub use error::{BenchError, Result};
pub use results::{aggregate, mean_se, read_csv, write_csv, write_summary, ResultRow, Summary, CSV_HEADER};
pub use run::{depth_job, depth_study, jobs, run_benchmark, run_job, run_jobs, worker_count, DepthRow, DepthSummary, Job};
pub use spec::{EnvId, PlannerId, RunSpec, SearchSettings};
