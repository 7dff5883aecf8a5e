//! Re-analysis of published summary statistics.
//!
//! Exact and normal-approximation tests on summary tables, Poisson and
//! binomial interval inversion, family-wise multiplicity adjustment, rule of
//! proportions extrapolation with identification intervals, two embedded case
//! studies, and a deterministic Monte Carlo harness.

pub mod distributions;
pub mod casestudies;
pub mod error;

pub use error::{Error, Result};
pub mod exact;
pub mod extrapolation;
pub mod json;
pub mod multiplicity;
pub mod simulation;
pub mod summary;
pub mod test_result;

pub use exact::{CountSample, TwoSidedConvention};
pub use summary::{BinSummary, Interval, PooledSummary};
pub use test_result::{Method, TestResult};
