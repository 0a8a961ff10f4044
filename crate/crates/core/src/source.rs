//! Shaped 4D sources: a constellation with a probability law.
//!
//! Every source here has independent uniform sign bits, so the law is fully
//! described by the distribution of the amplitude tuple in one quadrant.

use crate::constellation::{AmplitudeTuple, AskAlphabet, Labeling4D, Point4D, DIMS};
use crate::error::{Error, Result};
use crate::lut::{dense_index, LutDm};

const PMF_TOL: f64 = 1e-12;

/// Quadrant law of a sign-symmetric source.
#[derive(Debug, Clone, PartialEq)]
pub enum AmplitudeLaw {
    /// Explicit list of amplitude tuples with probabilities.
    Table {
        tuples: Vec<AmplitudeTuple>,
        probs: Vec<f64>,
    },
    /// The same amplitude pmf in each dimension, independently.
    /// Indexed by amplitude index (`1 -> 0`, `3 -> 1`, ...).
    Product { pmf: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct ShapedSource {
    ask: AskAlphabet,
    labeling: Labeling4D,
    law: AmplitudeLaw,
    uniform_table: bool,
    entropy: f64,
    mean_energy: f64,
    // table position per dense amplitude-index tuple, u32::MAX when absent
    position: Vec<u32>,
}

impl PartialEq for ShapedSource {
    fn eq(&self, other: &Self) -> bool {
        self.ask == other.ask && self.law == other.law
    }
}

fn entropy_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    -probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

fn check_pmf(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::Config("probabilities must be positive".into()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PMF_TOL * probs.len().max(1) as f64 {
        return Err(Error::Config(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

impl ShapedSource {
    /// Uniform law over the LUT entries with uniform signs.
    pub fn from_lut(dm: &LutDm) -> Self {
        let n = dm.len();
        let mut src = Self::build(
            dm.ask(),
            AmplitudeLaw::Table {
                tuples: dm.table().to_vec(),
                probs: vec![1.0 / n as f64; n],
            },
        );
        // H(X) = k + 4 exactly
        src.entropy = dm.k() as f64 + DIMS as f64;
        src.uniform_table = true;
        src
    }

    /// Explicit quadrant table. Tuples must be distinct and lie in the
    /// alphabet; probabilities positive and summing to one.
    pub fn from_table(
        ask: &AskAlphabet,
        tuples: Vec<AmplitudeTuple>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        if tuples.len() != probs.len() || tuples.is_empty() {
            return Err(Error::Config(
                "table and probabilities differ in length".into(),
            ));
        }
        check_pmf(&probs)?;
        let mut seen = std::collections::HashSet::new();
        for t in &tuples {
            for &a in &t.0 {
                ask.amplitude_index(a)?;
            }
            if !seen.insert(*t) {
                return Err(Error::Config(format!("duplicate tuple {:?}", t.0)));
            }
        }
        Ok(Self::build(ask, AmplitudeLaw::Table { tuples, probs }))
    }

    /// Independent per-dimension amplitudes with the given pmf.
    pub fn product(ask: &AskAlphabet, pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() != ask.num_amplitudes() {
            return Err(Error::Config(format!(
                "amplitude pmf has {} entries, alphabet has {} amplitudes",
                pmf.len(),
                ask.num_amplitudes()
            )));
        }
        check_pmf(&pmf)?;
        Ok(Self::build(ask, AmplitudeLaw::Product { pmf }))
    }

    /// Uniform `M`-ASK in every dimension (square `M^2`-QAM per 2D slice).
    pub fn uniform(ask: &AskAlphabet) -> Self {
        let n = ask.num_amplitudes();
        Self::build(
            ask,
            AmplitudeLaw::Product {
                pmf: vec![1.0 / n as f64; n],
            },
        )
    }

    fn build(ask: &AskAlphabet, law: AmplitudeLaw) -> Self {
        let half = ask.num_amplitudes();
        let amp_energy = |i: usize| ((2 * i + 1) * (2 * i + 1)) as f64;
        let (entropy, mean_energy, position) = match &law {
            AmplitudeLaw::Table { tuples, probs } => {
                let h = DIMS as f64 + entropy_bits(probs.iter().copied());
                let e = tuples
                    .iter()
                    .zip(probs)
                    .map(|(t, p)| p * t.energy() as f64)
                    .sum();
                let mut pos = vec![u32::MAX; half.pow(4)];
                for (i, t) in tuples.iter().enumerate() {
                    pos[dense_index(half, t)] = i as u32;
                }
                (h, e, pos)
            }
            AmplitudeLaw::Product { pmf } => {
                let h = DIMS as f64 * (1.0 + entropy_bits(pmf.iter().copied()));
                let e1: f64 = pmf.iter().enumerate().map(|(i, p)| p * amp_energy(i)).sum();
                (h, DIMS as f64 * e1, Vec::new())
            }
        };
        ShapedSource {
            ask: ask.clone(),
            labeling: Labeling4D::new(ask),
            law,
            uniform_table: false,
            entropy,
            mean_energy,
            position,
        }
    }

    pub fn ask(&self) -> &AskAlphabet {
        &self.ask
    }

    pub fn labeling(&self) -> &Labeling4D {
        &self.labeling
    }

    pub fn law(&self) -> &AmplitudeLaw {
        &self.law
    }

    /// True for a table law with equiprobable entries (LUT sources).
    pub fn is_uniform_table(&self) -> bool {
        self.uniform_table
    }

    /// `H(X)` in bits per 4D symbol.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    /// `E[|x|^2]` per 4D symbol in grid units squared.
    pub fn mean_energy(&self) -> f64 {
        self.mean_energy
    }

    /// Number of points in the constellation `|X|`.
    pub fn size(&self) -> usize {
        match &self.law {
            AmplitudeLaw::Table { tuples, .. } => tuples.len() << DIMS,
            AmplitudeLaw::Product { pmf } => (2 * pmf.len()).pow(DIMS as u32),
        }
    }

    /// Quadrant tuples with their probabilities (materialized for products).
    pub fn quadrant_table(&self) -> Vec<(AmplitudeTuple, f64)> {
        match &self.law {
            AmplitudeLaw::Table { tuples, probs } => {
                tuples.iter().copied().zip(probs.iter().copied()).collect()
            }
            AmplitudeLaw::Product { pmf } => {
                let n = pmf.len();
                (0..n.pow(DIMS as u32))
                    .map(|mut code| {
                        let mut t = [0u32; 4];
                        let mut p = 1.0;
                        for d in (0..DIMS).rev() {
                            let i = code % n;
                            code /= n;
                            t[d] = 2 * i as u32 + 1;
                            p *= pmf[i];
                        }
                        (AmplitudeTuple(t), p)
                    })
                    .collect()
            }
        }
    }

    /// Probability of an amplitude tuple, summed over its 16 sign patterns.
    pub fn quadrant_prob(&self, t: &AmplitudeTuple) -> f64 {
        if t.0.iter().any(|&a| self.ask.amplitude_index(a).is_err()) {
            return 0.0;
        }
        match &self.law {
            AmplitudeLaw::Table { probs, .. } => {
                match self.position[dense_index(self.ask.num_amplitudes(), t)] {
                    u32::MAX => 0.0,
                    i => probs[i as usize],
                }
            }
            AmplitudeLaw::Product { pmf } => t.0.iter().map(|&a| pmf[(a / 2) as usize]).product(),
        }
    }

    /// Probability of a signed point; zero outside the constellation.
    pub fn prob(&self, p: &Point4D) -> f64 {
        if p.0.iter().any(|&c| self.ask.level_index(c).is_err()) {
            return 0.0;
        }
        self.quadrant_prob(&p.amplitudes()) / (1 << DIMS) as f64
    }

    pub fn contains(&self, p: &Point4D) -> bool {
        self.prob(p) > 0.0
    }

    /// Every point of the constellation with its probability.
    pub fn points(&self) -> Vec<(Point4D, f64)> {
        let mut out = Vec::with_capacity(self.size());
        for (t, p) in self.quadrant_table() {
            for s in 0..1u8 << DIMS {
                out.push((Point4D::from_amplitudes(&t, s), p / (1 << DIMS) as f64));
            }
        }
        out
    }

    /// Amplitude pmf of one dimension, indexed by amplitude index.
    pub fn amplitude_marginal(&self, dim: usize) -> Vec<f64> {
        match &self.law {
            AmplitudeLaw::Product { pmf } => pmf.clone(),
            AmplitudeLaw::Table { tuples, probs } => {
                let mut m = vec![0.0; self.ask.num_amplitudes()];
                for (t, p) in tuples.iter().zip(probs) {
                    m[(t.0[dim] / 2) as usize] += p;
                }
                m
            }
        }
    }
}
