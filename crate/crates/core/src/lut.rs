//! Look-up-table distribution matcher over one quadrant of the 4D
//! constellation.
//!
//! `k` uniform bits select one of the `2^k` lowest-energy amplitude tuples.
//! Together with 4 uniform sign bits this yields a 4D constellation of
//! `2^(k+4)` equiprobable points.

use std::io::Write;

use crate::constellation::{quadrant_enumerate, AmplitudeTuple, AskAlphabet, Labeling4D};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LutDm {
    ask: AskAlphabet,
    k: u32,
    table: Vec<AmplitudeTuple>,
    // dense inverse over amplitude-index tuples, u32::MAX for excluded tuples
    inverse: Vec<u32>,
}

impl LutDm {
    /// Keeps the first `2^k` entries of [`quadrant_enumerate`].
    pub fn new(ask: &AskAlphabet, k: u32) -> Result<Self> {
        let max = Labeling4D::new(ask).m_q();
        if k == 0 || k > max {
            return Err(Error::InvalidK { k, max });
        }
        let mut table = quadrant_enumerate(ask);
        table.truncate(1 << k);
        let half = ask.num_amplitudes();
        let mut inverse = vec![u32::MAX; half.pow(4)];
        for (i, t) in table.iter().enumerate() {
            inverse[dense_index(half, t)] = i as u32;
        }
        Ok(LutDm {
            ask: ask.clone(),
            k,
            table,
            inverse,
        })
    }

    pub fn ask(&self) -> &AskAlphabet {
        &self.ask
    }

    /// Input bits per 4D symbol, which is also the DM rate in bits/4D.
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn table(&self) -> &[AmplitudeTuple] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Maps a `k`-bit word (natural binary table index) to its tuple.
    pub fn encode(&self, word: u64) -> Result<AmplitudeTuple> {
        if word >> self.k != 0 {
            return Err(Error::WordOutOfRange { word, bits: self.k });
        }
        Ok(self.table[word as usize])
    }

    /// Inverse of [`LutDm::encode`]. Tuples outside the table are rejected.
    pub fn decode(&self, tuple: &AmplitudeTuple) -> Result<u64> {
        let half = self.ask.num_amplitudes();
        if tuple
            .0
            .iter()
            .any(|&a| a % 2 == 0 || a > self.ask.max_amplitude())
        {
            return Err(Error::NotInTable(tuple.0));
        }
        match self.inverse[dense_index(half, tuple)] {
            u32::MAX => Err(Error::NotInTable(tuple.0)),
            i => Ok(i as u64),
        }
    }

    /// Mean tuple energy in grid units squared.
    pub fn mean_energy(&self) -> f64 {
        let sum: u64 = self.table.iter().map(|t| t.energy() as u64).sum();
        sum as f64 / self.table.len() as f64
    }

    /// Writes the table as CSV: `index,a1,a2,a3,a4,energy`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,a1,a2,a3,a4,energy")?;
        for (i, t) in self.table.iter().enumerate() {
            let [a, b, c, d] = t.0;
            writeln!(out, "{i},{a},{b},{c},{d},{}", t.energy())?;
        }
        Ok(())
    }
}

pub(crate) fn dense_index(half: usize, t: &AmplitudeTuple) -> usize {
    t.0.iter()
        .fold(0usize, |acc, &a| acc * half + (a / 2) as usize)
}
