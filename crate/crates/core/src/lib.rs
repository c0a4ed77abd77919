//! Efficient-influence-function estimators for evaluating language models
//! with cheap auxiliary pairwise signals.
//!
//! The crate covers the metric and record types, a synthetic data generator
//! with closed-form oracle quantities, cross-fitted nuisance regression, the
//! naive and one-step estimators, model ranking experiments, and the file
//! formats and CLI built on top of them.

pub mod cli;
pub mod error;
pub mod estimate;
pub mod io;
pub mod metric;
pub mod nuisance;
pub mod ranking;
pub mod record;
pub mod simulate;
pub mod stream;

pub use error::{Error, Result};
pub use estimate::{
    naive_estimate, one_step_crossfit, one_step_fixed, EstimateReport, InfluenceBreakdown, Method,
};
pub use metric::MetricKind;
pub use record::{AuxTriple, BenchRecord, SimRecord};
pub use simulate::{gen_sim_dataset, OracleParams, SimConfig};
pub use stream::Stream;
