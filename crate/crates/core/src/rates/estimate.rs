use rayon::prelude::*;

use super::metric::{DecodingMetric, Scratch};
use crate::channel::{ReceiveStream, SnrSpec};
use crate::error::{Error, Result};
use crate::pas::{SymbolStream, BLOCK};

/// Monte-Carlo achievable rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// `[H - mean]+` in bits per 4D symbol.
    pub rate: f64,
    /// `H - mean` before clipping.
    pub raw: f64,
    /// Standard error of the summand mean, bits per 4D symbol.
    pub stderr: f64,
    pub samples: usize,
    /// Source entropy in bits per 4D symbol.
    pub entropy: f64,
}

impl RateEstimate {
    pub fn rate_bpqs(&self) -> f64 {
        self.rate / 2.0
    }

    pub fn stderr_bpqs(&self) -> f64 {
        self.stderr / 2.0
    }
}

/// Count, mean and centered second moment.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }
}

/// Per-sample summands `-log2(q(x,y) / sum_a q(a,y))`.
pub fn summands(
    xs: &SymbolStream,
    ys: &ReceiveStream,
    metric: &DecodingMetric,
) -> Result<Vec<f64>> {
    check(xs, ys, metric)?;
    let chunks: Vec<Vec<f64>> = xs
        .points()
        .par_chunks(BLOCK)
        .zip(ys.samples().par_chunks(BLOCK))
        .map(|(x, y)| {
            let mut sc = Scratch::default();
            x.iter()
                .zip(y)
                .map(|(x, y)| metric.summand(x, y, &mut sc))
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

fn check(xs: &SymbolStream, ys: &ReceiveStream, metric: &DecodingMetric) -> Result<()> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyStream);
    }
    if xs.len() != ys.len() {
        return Err(Error::Misaligned(xs.len(), ys.len()));
    }
    if xs.source() != metric.source() {
        return Err(Error::SourceMismatch);
    }
    Ok(())
}

/// Monte-Carlo estimate of the achievable rate for a decoding metric.
///
/// Blocks of samples are reduced independently and merged in block order,
/// so the result is bit-identical for any number of worker threads.
pub fn achievable_rate(
    xs: &SymbolStream,
    ys: &ReceiveStream,
    metric: &DecodingMetric,
) -> Result<RateEstimate> {
    check(xs, ys, metric)?;
    let blocks: Vec<Moments> = xs
        .points()
        .par_chunks(BLOCK)
        .zip(ys.samples().par_chunks(BLOCK))
        .map(|(x, y)| {
            let mut sc = Scratch::default();
            let mut m = Moments::default();
            for (x, y) in x.iter().zip(y) {
                m.push(metric.summand(x, y, &mut sc));
            }
            m
        })
        .collect();
    let m = blocks.into_iter().fold(Moments::default(), Moments::merge);
    let entropy = metric.source().entropy();
    let raw = entropy - m.mean;
    let stderr = if m.n > 1.0 {
        (m.m2 / (m.n - 1.0) / m.n).sqrt()
    } else {
        0.0
    };
    Ok(RateEstimate {
        rate: raw.max(0.0),
        raw,
        stderr,
        samples: xs.len(),
        entropy,
    })
}

/// `log2(1 + snr)` in bits per QAM symbol.
pub fn gaussian_capacity(snr: SnrSpec) -> f64 {
    snr.linear().ln_1p() / std::f64::consts::LN_2
}
