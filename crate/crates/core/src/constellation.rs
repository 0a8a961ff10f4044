//! ASK alphabets, the 4D product constellation and its BRGC labeling.
//!
//! Coordinates live on the odd-integer grid (`..., -3, -1, 1, 3, ...`).
//! Scaling to unit energy happens only in [`crate::channel`].

use crate::error::{Error, Result};

/// Number of real dimensions of a constellation point.
pub const DIMS: usize = 4;

/// `M`-ary amplitude shift keying on the odd-integer grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AskAlphabet {
    size: usize,
    levels: Vec<i32>,
}

impl AskAlphabet {
    /// Builds the `M`-ASK alphabet. `M` must be a power of two, `M >= 4`.
    pub fn new(size: usize) -> Result<Self> {
        if size < 4 || !size.is_power_of_two() {
            return Err(Error::InvalidAskSize(size));
        }
        Ok(Self::build(size))
    }

    /// The binary alphabet `{-1, +1}`.
    ///
    /// Not usable for shaping (it has a single amplitude) but needed for
    /// BPSK/QPSK reference sources.
    pub fn binary() -> Self {
        Self::build(2)
    }

    fn build(size: usize) -> Self {
        let max = size as i32 - 1;
        let levels = (0..size as i32).map(|i| 2 * i - max).collect();
        AskAlphabet { size, levels }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Levels in ascending order.
    pub fn levels(&self) -> &[i32] {
        &self.levels
    }

    pub fn bits_per_dim(&self) -> u32 {
        self.size.trailing_zeros()
    }

    /// Positive amplitudes `1, 3, ..., M-1`.
    pub fn amplitudes(&self) -> impl Iterator<Item = u32> + '_ {
        (1..self.size as u32).step_by(2)
    }

    pub fn num_amplitudes(&self) -> usize {
        self.size / 2
    }

    pub fn max_amplitude(&self) -> u32 {
        self.size as u32 - 1
    }

    /// Position of `level` in [`Self::levels`].
    pub fn level_index(&self, level: i32) -> Result<usize> {
        let max = self.size as i32 - 1;
        if level % 2 == 0 || level.abs() > max {
            return Err(Error::OffGrid(level));
        }
        Ok(((level + max) / 2) as usize)
    }

    /// Index of a positive amplitude, `1 -> 0`, `3 -> 1`, ...
    pub fn amplitude_index(&self, amplitude: u32) -> Result<usize> {
        if amplitude % 2 == 0 || amplitude > self.max_amplitude() {
            return Err(Error::InvalidAmplitude(amplitude));
        }
        Ok((amplitude / 2) as usize)
    }
}

/// Binary reflected Gray code of the given width: entry `i` is `i ^ (i >> 1)`.
pub fn brgc(width: u32) -> Result<Vec<u32>> {
    if width == 0 || width > 31 {
        return Err(Error::InvalidWidth(width));
    }
    Ok((0..1u32 << width).map(|i| i ^ (i >> 1)).collect())
}

/// Four positive amplitudes, one per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AmplitudeTuple(pub [u32; 4]);

impl AmplitudeTuple {
    pub fn energy(&self) -> u32 {
        self.0.iter().map(|a| a * a).sum()
    }
}

/// A 4D point in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point4D(pub [i32; 4]);

impl Point4D {
    /// Combines amplitudes with sign bits; bit `d` of `signs` set means
    /// coordinate `d` is negative.
    pub fn from_amplitudes(amps: &AmplitudeTuple, signs: u8) -> Self {
        let mut c = [0i32; 4];
        for d in 0..DIMS {
            let a = amps.0[d] as i32;
            c[d] = if signs >> d & 1 == 1 { -a } else { a };
        }
        Point4D(c)
    }

    pub fn amplitudes(&self) -> AmplitudeTuple {
        AmplitudeTuple(self.0.map(|c| c.unsigned_abs()))
    }

    /// Sign pattern in the encoding used by [`Point4D::from_amplitudes`].
    pub fn signs(&self) -> u8 {
        self.0
            .iter()
            .enumerate()
            .fold(0u8, |s, (d, &c)| s | (u8::from(c < 0) << d))
    }

    pub fn energy(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }
}

/// Per-dimension BRGC labeling of the 4D product constellation.
///
/// Each dimension carries `log2 M` bits; the 4D label concatenates dimension
/// 1 (most significant) through dimension 4. Within a dimension the most
/// significant bit is the sign bit (0 positive, 1 negative) and the remaining
/// bits are shared by `+a` and `-a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling4D {
    ask: AskAlphabet,
    width: u32,
    label_of_level: Vec<u32>,
    level_of_label: Vec<usize>,
}

impl Labeling4D {
    pub fn new(ask: &AskAlphabet) -> Self {
        let width = ask.bits_per_dim();
        let size = ask.size();
        let gray = brgc(width).expect("ASK widths are in range");
        // Ascending level j gets gray(M-1-j): positive levels come first in
        // Gray order, which puts 0 on the sign bit for positive levels.
        let label_of_level: Vec<u32> = (0..size).map(|j| gray[size - 1 - j]).collect();
        let mut level_of_label = vec![0; size];
        for (j, &l) in label_of_level.iter().enumerate() {
            level_of_label[l as usize] = j;
        }
        Labeling4D {
            ask: ask.clone(),
            width,
            label_of_level,
            level_of_label,
        }
    }

    pub fn ask(&self) -> &AskAlphabet {
        &self.ask
    }

    /// Bits per dimension.
    pub fn width(&self) -> u32 {
        self.width
    }

    /// Total label bits `m = log2(M^4)`.
    pub fn m(&self) -> u32 {
        DIMS as u32 * self.width
    }

    /// Amplitude (quadrant) bits `m_Q = m - 4`.
    pub fn m_q(&self) -> u32 {
        self.m() - DIMS as u32
    }

    /// Sign bits, always 4.
    pub fn m_s(&self) -> u32 {
        DIMS as u32
    }

    /// Per-dimension label of a level.
    pub fn level_label(&self, level: i32) -> Result<u32> {
        Ok(self.label_of_level[self.ask.level_index(level)?])
    }

    /// Per-dimension label indexed by ascending level position.
    pub fn labels_by_level_index(&self) -> &[u32] {
        &self.label_of_level
    }

    fn shift(&self, dim: usize) -> u32 {
        self.width * (DIMS as u32 - 1 - dim as u32)
    }

    /// Bit position (counting from the LSB of the 4D label) of the sign bit
    /// of `dim`.
    pub fn sign_bit(&self, dim: usize) -> u32 {
        self.shift(dim) + self.width - 1
    }

    /// Bit positions of the amplitude bits of `dim`.
    pub fn amplitude_bits(&self, dim: usize) -> impl Iterator<Item = u32> {
        let base = self.shift(dim);
        base..base + self.width - 1
    }

    pub fn label_to_point(&self, label: u32) -> Result<Point4D> {
        let m = self.m();
        if m < 32 && label >> m != 0 {
            return Err(Error::LabelOutOfRange { label, bits: m });
        }
        let mask = (1u32 << self.width) - 1;
        let mut c = [0i32; 4];
        for (d, coord) in c.iter_mut().enumerate() {
            let l = (label >> self.shift(d)) & mask;
            *coord = self.ask.levels()[self.level_of_label[l as usize]];
        }
        Ok(Point4D(c))
    }

    pub fn point_to_label(&self, point: &Point4D) -> Result<u32> {
        point.0.iter().enumerate().try_fold(0u32, |acc, (d, &c)| {
            Ok(acc | self.level_label(c)? << self.shift(d))
        })
    }
}

/// All `(M/2)^4` amplitude tuples of one quadrant, sorted by energy and then
/// lexicographically.
pub fn quadrant_enumerate(ask: &AskAlphabet) -> Vec<AmplitudeTuple> {
    let amps: Vec<u32> = ask.amplitudes().collect();
    let mut out = Vec::with_capacity(amps.len().pow(4));
    for &a in &amps {
        for &b in &amps {
            for &c in &amps {
                for &d in &amps {
                    out.push(AmplitudeTuple([a, b, c, d]));
                }
            }
        }
    }
    out.sort_by_key(|t| (t.energy(), *t));
    out
}
