//! Distribution kernels: log-space binomial and Poisson mass functions and
//! tails, the standard normal, and chi-square quantiles.
//!
//! Everything here is a pure function of its arguments.

mod continuous;
mod discrete;
mod log_prob;
pub mod special;

pub use continuous::{
    chi_square_cdf, chi_square_quantile, chi_square_sf, normal_cdf, normal_quantile, normal_sf,
};
pub use discrete::{
    binomial_cdf, binomial_cdf_by_beta, binomial_cdf_by_summation, binomial_log_pmf, binomial_sf,
    poisson_cdf, poisson_log_pmf, poisson_sf, BinomialParams, CountDistribution, PoissonParams,
    SUMMATION_LIMIT,
};
pub use log_prob::{log_sum_exp, LogProb};
pub use special::ln_gamma;
