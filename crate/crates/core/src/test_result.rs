use serde::{Deserialize, Serialize};

use crate::exact::TwoSidedConvention;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TwoSampleZ,
    ExactBinomial,
    ExactPoisson,
    KruskalWallis,
}

/// Outcome of a hypothesis test, echoing the inputs it was run on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_two_sided: f64,
    /// Probability of a result at least this far below the null; absent for
    /// tests with no natural direction.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_one_sided_low: Option<f64>,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub convention: Option<TwoSidedConvention>,
    /// Set when the p-value is a convention for an undefined (0/0) case.
    pub degenerate: bool,
    pub inputs: serde_json::Value,
}
