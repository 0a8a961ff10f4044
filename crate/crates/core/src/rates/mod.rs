//! Achievable-rate estimation for symbol-metric and bit-metric decoding.
//!
//! `R = [H(X) - E(-log2(q(X,Y) / sum_a q(a,Y)))]+` in bits per 4D symbol,
//! where `q` is a decoding metric and `H(X)` comes from the source pmf.

mod estimate;
mod metric;
mod oracle;

pub use estimate::{achievable_rate, gaussian_capacity, summands, RateEstimate};
pub use metric::{DecodingMetric, MetricKind, Scratch};
pub use oracle::{
    exact_rate_oracle, exact_rate_oracle_with, exact_summand_moments, SummandMoments, ORACLE_LIMIT,
    ORACLE_NODES,
};
