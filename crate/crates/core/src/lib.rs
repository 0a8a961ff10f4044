//! Probabilistic amplitude shaping for four-dimensional signalling.
//!
//! The crate covers M-ASK grids with a sign-separable Gray labeling,
//! quadrant shaping with a lookup-table distribution matcher, constant
//! composition distribution matching, the PAS rate bookkeeping, an AWGN
//! channel and Monte-Carlo and quadrature achievable-rate estimates.

pub mod ccdm;
pub mod channel;
pub mod cli;
pub mod constellation;
pub mod error;
pub mod fmt;
pub mod lut;
pub mod pas;
pub mod rates;
pub mod source;

pub use error::{Error, Result};
