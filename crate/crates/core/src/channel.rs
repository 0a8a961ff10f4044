//! Power normalization, the linear AWGN channel and moment statistics.
//!
//! SNR convention: `Es/N0` per complex (2D) symbol. Sources are scaled to
//! unit energy per 2D slice, i.e. `E[|x|^2] = 2` per 4D symbol, so the noise
//! variance per real dimension is `1 / (2 snr)`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::constellation::DIMS;
use crate::error::{Error, Result};
use crate::pas::{block_rng, SymbolStream, BLOCK};
use crate::source::{AmplitudeLaw, ShapedSource};

/// Energy per 4D symbol after normalization.
pub const ENERGY_PER_4D: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    snr_db: f64,
}

impl SnrSpec {
    /// `+inf` is allowed and means a noiseless channel.
    pub fn from_db(snr_db: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("invalid SNR {snr_db} dB")));
        }
        Ok(SnrSpec { snr_db })
    }

    pub fn db(&self) -> f64 {
        self.snr_db
    }

    pub fn linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Noise variance per real dimension.
    pub fn sigma2(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            0.0
        } else {
            1.0 / (2.0 * self.linear())
        }
    }
}

/// Scale factor `Δ` with `E[|Δx|^2] = 2` per 4D symbol, from the pmf.
pub fn normalize(source: &ShapedSource) -> Result<f64> {
    let e = source.mean_energy();
    if !(e > 0.0) {
        return Err(Error::DegenerateSource);
    }
    Ok((ENERGY_PER_4D / e).sqrt())
}

/// Received 4D vectors `y = Δx + z`.
#[derive(Debug, Clone)]
pub struct ReceiveStream {
    samples: Vec<[f64; 4]>,
    snr: SnrSpec,
    seed: u64,
}

impl ReceiveStream {
    pub fn new(samples: Vec<[f64; 4]>, snr: SnrSpec, seed: u64) -> Self {
        ReceiveStream { samples, snr, seed }
    }

    pub fn samples(&self) -> &[[f64; 4]] {
        &self.samples
    }

    pub fn snr(&self) -> SnrSpec {
        self.snr
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Standard normal samples, 4 per symbol, in independently seeded blocks.
pub fn unit_noise(k: usize, seed: u64) -> Vec<[f64; 4]> {
    let blocks = k.div_ceil(BLOCK);
    let chunks: Vec<Vec<[f64; 4]>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let len = BLOCK.min(k - b * BLOCK);
            (0..len)
                .map(|_| {
                    let mut z = [0.0; 4];
                    for v in z.iter_mut() {
                        *v = StandardNormal.sample(&mut rng);
                    }
                    z
                })
                .collect()
        })
        .collect();
    chunks.concat()
}

/// Passes a normalized symbol stream through the AWGN channel.
pub fn add_noise(xs: &SymbolStream, snr: SnrSpec, seed: u64) -> Result<ReceiveStream> {
    let scale = normalize(xs.source())?;
    let sigma = snr.sigma2().sqrt();
    let noise = unit_noise(xs.len(), seed);
    let samples = xs
        .points()
        .iter()
        .zip(noise)
        .map(|(p, z)| {
            let mut y = [0.0; 4];
            for d in 0..DIMS {
                y[d] = scale * p.0[d] as f64 + sigma * z[d];
            }
            y
        })
        .collect();
    Ok(ReceiveStream { samples, snr, seed })
}

/// `E|x_c|^4 / (E|x_c|^2)^2` per complex slice, averaged over the two
/// slices of a 4D symbol. Scale invariant.
pub fn moment_ratio(source: &ShapedSource) -> f64 {
    match source.law() {
        AmplitudeLaw::Product { pmf } => {
            let (m2, m4) = pmf.iter().enumerate().fold((0.0, 0.0), |(m2, m4), (i, p)| {
                let a2 = ((2 * i + 1) * (2 * i + 1)) as f64;
                (m2 + p * a2, m4 + p * a2 * a2)
            });
            // x_c = a + jb with a, b i.i.d.
            (2.0 * m4 + 2.0 * m2 * m2) / (4.0 * m2 * m2)
        }
        AmplitudeLaw::Table { .. } => {
            let mut second = [0.0; 2];
            let mut fourth = [0.0; 2];
            for (t, p) in source.quadrant_table() {
                for s in 0..2 {
                    let e = (t.0[2 * s] * t.0[2 * s] + t.0[2 * s + 1] * t.0[2 * s + 1]) as f64;
                    second[s] += p * e;
                    fourth[s] += p * e * e;
                }
            }
            (0..2)
                .map(|s| fourth[s] / (second[s] * second[s]))
                .sum::<f64>()
                / 2.0
        }
    }
}
