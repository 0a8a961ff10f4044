//! Constant composition distribution matching with Maxwell-Boltzmann targets.
//!
//! The arithmetic coder runs on exact big-integer interval bounds. With exact
//! arithmetic, the sub-interval of a prefix has width (number of completions)
//! / (number of sequences), so coding reduces to lexicographic ranking of
//! fixed-composition sequences with amplitudes ordered ascending.

use std::io::Write;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::constellation::AskAlphabet;
use crate::error::{Error, Result};

/// `P(a) ∝ exp(-nu a^2)` over the positive amplitudes of an alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct MbDistribution {
    nu: f64,
    amplitudes: Vec<u32>,
    pmf: Vec<f64>,
}

impl MbDistribution {
    pub fn new(ask: &AskAlphabet, nu: f64) -> Result<Self> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::NegativeNu(nu));
        }
        let amplitudes: Vec<u32> = ask.amplitudes().collect();
        // shift by the smallest energy so the largest weight is exactly 1
        let w: Vec<f64> = amplitudes
            .iter()
            .map(|&a| (-nu * ((a * a) as f64 - 1.0)).exp())
            .collect();
        let z: f64 = w.iter().sum();
        let pmf = w.into_iter().map(|x| x / z).collect();
        Ok(MbDistribution {
            nu,
            amplitudes,
            pmf,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn amplitudes(&self) -> &[u32] {
        &self.amplitudes
    }

    /// Probabilities in ascending amplitude order.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Entropy in bits per amplitude.
    pub fn entropy(&self) -> f64 {
        entropy(&self.pmf)
    }
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|x| x * x.log2())
        .sum::<f64>()
}

/// Finds `nu` whose MB law has the target entropy (bits per amplitude) by
/// bisection.
pub fn fit_mb_entropy(ask: &AskAlphabet, target: f64) -> Result<f64> {
    let max = (ask.num_amplitudes() as f64).log2();
    if !(target > 0.0 && target <= max) {
        return Err(Error::EntropyOutOfRange { target, max });
    }
    let h = |nu: f64| MbDistribution::new(ask, nu).map(|d| d.entropy());
    if max - target <= 1e-12 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while h(hi)? > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::EntropyOutOfRange { target, max });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let hm = h(mid)?;
        if (hm - target).abs() <= 1e-13 {
            return Ok(mid);
        }
        if hm > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Amplitude counts of a block of `n` amplitudes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    amplitudes: Vec<u32>,
    counts: Vec<u64>,
}

impl Composition {
    pub fn new(amplitudes: Vec<u32>, counts: Vec<u64>) -> Result<Self> {
        if amplitudes.len() != counts.len() || amplitudes.is_empty() {
            return Err(Error::Config(
                "amplitudes and counts differ in length".into(),
            ));
        }
        if amplitudes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "amplitudes must be strictly ascending".into(),
            ));
        }
        if let Some(&a) = amplitudes.iter().find(|&&a| a % 2 == 0) {
            return Err(Error::InvalidAmplitude(a));
        }
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::Config("empty composition".into()));
        }
        Ok(Composition { amplitudes, counts })
    }

    /// Largest-remainder quantization of `n * P(a)`; leftover units go to the
    /// largest fractional parts, ties to the smaller amplitude.
    pub fn quantize(dist: &MbDistribution, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("block length must be positive".into()));
        }
        Self::quantize_pmf(dist.amplitudes(), dist.pmf(), n)
    }

    pub fn quantize_pmf(amplitudes: &[u32], pmf: &[f64], n: u64) -> Result<Self> {
        let scaled: Vec<f64> = pmf.iter().map(|p| p * n as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|x| x.floor() as u64).collect();
        let assigned: u64 = counts.iter().sum();
        let mut order: Vec<usize> = (0..pmf.len()).collect();
        // stable sort keeps ascending amplitude among equal remainders
        order.sort_by(|&a, &b| {
            let fa = scaled[a] - scaled[a].floor();
            let fb = scaled[b] - scaled[b].floor();
            fb.total_cmp(&fa)
        });
        for &i in order
            .iter()
            .cycle()
            .take(n.saturating_sub(assigned) as usize)
        {
            counts[i] += 1;
        }
        Self::new(amplitudes.to_vec(), counts)
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn amplitudes(&self) -> &[u32] {
        &self.amplitudes
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Empirical pmf `counts / n`.
    pub fn pmf(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.pmf())
    }

    /// `n! / prod(counts!)`, the number of sequences with this composition.
    pub fn multinomial(&self) -> BigUint {
        let mut total = BigUint::one();
        let mut placed = 0u64;
        for &c in &self.counts {
            // multiply in C(placed + c, c) one factor at a time
            for j in 1..=c {
                total *= placed + j;
                total /= j;
            }
            placed += c;
        }
        total
    }

    /// `floor(log2(multinomial))`.
    pub fn input_length(&self) -> u64 {
        self.multinomial().bits() - 1
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "amplitude,count")?;
        for (a, c) in self.amplitudes.iter().zip(&self.counts) {
            writeln!(out, "{a},{c}")?;
        }
        Ok(())
    }

    fn index_of(&self, amplitude: u32) -> Option<usize> {
        self.amplitudes.binary_search(&amplitude).ok()
    }
}

/// Exact arithmetic-coding CCDM for one composition.
#[derive(Debug, Clone)]
pub struct CcdmCodec {
    composition: Composition,
    total: BigUint,
    input_bits: u64,
}

impl CcdmCodec {
    pub fn new(composition: Composition) -> Self {
        let total = composition.multinomial();
        let input_bits = total.bits() - 1;
        CcdmCodec {
            composition,
            total,
            input_bits,
        }
    }

    pub fn composition(&self) -> &Composition {
        &self.composition
    }

    /// Input bits per block, `k_cc`.
    pub fn input_bits(&self) -> u64 {
        self.input_bits
    }

    pub fn block_length(&self) -> usize {
        self.composition.n() as usize
    }

    /// DM rate `k_cc / n` in bits per amplitude.
    pub fn rate(&self) -> f64 {
        self.input_bits as f64 / self.composition.n() as f64
    }

    /// Encodes a `k_cc`-bit word into a sequence of amplitudes.
    pub fn encode(&self, word: &BigUint) -> Result<Vec<u32>> {
        if word.bits() > self.input_bits {
            return Err(Error::Config(format!(
                "input word has {} bits, codec takes {}",
                word.bits(),
                self.input_bits
            )));
        }
        // the point word / 2^k lands in the interval of sequence number
        // floor(word * N / 2^k)
        let rank = (word * &self.total) >> self.input_bits;
        Ok(self.unrank(rank))
    }

    /// Inverse of [`CcdmCodec::encode`].
    pub fn decode(&self, seq: &[u32]) -> Result<BigUint> {
        if seq.len() != self.block_length() {
            return Err(Error::WrongLength {
                got: seq.len(),
                expected: self.block_length(),
            });
        }
        let rank = self.rank(seq)?;
        // smallest word whose point falls in [rank, rank + 1) / N
        let word = ((&rank << self.input_bits) + &self.total - 1u32) / &self.total;
        if (&word * &self.total) >> self.input_bits != rank {
            return Err(Error::NotInCodebook);
        }
        Ok(word)
    }

    fn unrank(&self, mut rank: BigUint) -> Vec<u32> {
        let amps = self.composition.amplitudes();
        let mut counts = self.composition.counts().to_vec();
        let mut remaining = self.composition.n();
        let mut width = self.total.clone();
        let mut out = Vec::with_capacity(remaining as usize);
        while remaining > 0 {
            for (i, c) in counts.iter_mut().enumerate() {
                if *c == 0 {
                    continue;
                }
                let sub = &width * *c / remaining;
                if rank < sub {
                    out.push(amps[i]);
                    *c -= 1;
                    width = sub;
                    break;
                }
                rank -= sub;
            }
            remaining -= 1;
        }
        out
    }

    fn rank(&self, seq: &[u32]) -> Result<BigUint> {
        let mut counts = self.composition.counts().to_vec();
        let mut remaining = self.composition.n();
        let mut width = self.total.clone();
        let mut rank = BigUint::zero();
        for &a in seq {
            let idx = self
                .composition
                .index_of(a)
                .ok_or(Error::WrongComposition)?;
            if counts[idx] == 0 {
                return Err(Error::WrongComposition);
            }
            for &c in &counts[..idx] {
                if c > 0 {
                    rank += &width * c / remaining;
                }
            }
            width = &width * counts[idx] / remaining;
            counts[idx] -= 1;
            remaining -= 1;
        }
        Ok(rank)
    }
}

/// Packs bits (MSB first) into an integer word.
pub fn word_from_bits(bits: &[bool]) -> BigUint {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    // little-endian bit order inside the integer: last bit is bit 0
    for (i, &b) in bits.iter().rev().enumerate() {
        if b {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    BigUint::from_bytes_le(&bytes)
}

/// Unpacks the low `len` bits of a word, MSB first.
pub fn bits_from_word(word: &BigUint, len: u64) -> Vec<bool> {
    (0..len).rev().map(|i| word.bit(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ask(m: usize) -> AskAlphabet {
        AskAlphabet::new(m).unwrap()
    }

    fn comp(counts: &[u64]) -> Composition {
        let amps = (0..counts.len() as u32).map(|i| 2 * i + 1).collect();
        Composition::new(amps, counts.to_vec()).unwrap()
    }

    #[test]
    fn mb_pmf_examples() {
        let d = MbDistribution::new(&ask(4), 0.0).unwrap();
        assert_eq!(d.pmf(), &[0.5, 0.5]);
        let d = MbDistribution::new(&ask(4), 2f64.ln() / 8.0).unwrap();
        assert!((d.pmf()[0] - 2.0 / 3.0).abs() < 1e-15);
        let d = MbDistribution::new(&ask(4), 50.0).unwrap();
        assert_eq!(d.pmf()[0], 1.0);
        assert!(d.pmf()[1] > 0.0 && d.pmf()[1] < 1e-170);
        assert_eq!(
            MbDistribution::new(&ask(4), -0.1),
            Err(Error::NegativeNu(-0.1))
        );
        let d = MbDistribution::new(&ask(16), 0.03).unwrap();
        assert!((d.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d.pmf().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn fit_examples() {
        assert_eq!(fit_mb_entropy(&ask(4), 1.0).unwrap(), 0.0);
        // independent route: invert the binary entropy for P(3), then
        // nu = ln((1-p)/p) / 8
        let hb = |p: f64| -(p * p.log2() + (1.0 - p) * (1.0 - p).log2());
        let (mut lo, mut hi) = (1e-9, 0.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hb(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p3 = 0.5 * (lo + hi);
        assert!((p3 - 0.110).abs() < 1e-3);
        let nu_ref = ((1.0 - p3) / p3).ln() / 8.0;
        let nu = fit_mb_entropy(&ask(4), 0.5).unwrap();
        assert!((nu - nu_ref).abs() < 1e-8);
        assert!((nu - 0.261).abs() < 5e-4);
        assert!(fit_mb_entropy(&ask(4), 1.1).is_err());
        assert!(fit_mb_entropy(&ask(4), 0.0).is_err());
    }

    #[test]
    fn fit_reaches_target() {
        for m in [4, 8, 16, 32] {
            let a = ask(m);
            let max = ((m / 2) as f64).log2();
            for frac in [0.05, 0.3, 0.5, 0.77, 0.99] {
                let t = frac * max;
                let nu = fit_mb_entropy(&a, t).unwrap();
                let h = MbDistribution::new(&a, nu).unwrap().entropy();
                assert!((h - t).abs() <= 1e-9, "M={m} target={t} got {h}");
            }
        }
    }

    #[test]
    fn quantize_examples() {
        let q = |p: &[f64], n| {
            Composition::quantize_pmf(&[1, 3], p, n)
                .unwrap()
                .counts()
                .to_vec()
        };
        assert_eq!(q(&[0.5, 0.5], 4), vec![2, 2]);
        assert_eq!(q(&[0.7, 0.3], 10), vec![7, 3]);
        assert_eq!(q(&[0.55, 0.45], 3), vec![2, 1]);
        // tie between equal remainders goes to the smaller amplitude
        assert_eq!(q(&[0.5, 0.5], 3), vec![2, 1]);
        let d = MbDistribution::new(&ask(16), 0.02).unwrap();
        assert_eq!(Composition::quantize(&d, 6000).unwrap().n(), 6000);
        assert!(Composition::quantize(&d, 0).is_err());
    }

    #[test]
    fn input_length_examples() {
        assert_eq!(comp(&[2, 2]).multinomial(), BigUint::from(6u32));
        assert_eq!(comp(&[2, 2]).input_length(), 2);
        assert_eq!(comp(&[5, 0]).input_length(), 0);
        assert_eq!(comp(&[1, 1]).input_length(), 1);
        assert_eq!(comp(&[3, 2, 1]).multinomial(), BigUint::from(60u32));
    }

    #[test]
    fn encode_examples() {
        let c = CcdmCodec::new(comp(&[1, 1]));
        assert_eq!(c.encode(&BigUint::from(0u32)).unwrap(), vec![1, 3]);
        assert_eq!(c.encode(&BigUint::from(1u32)).unwrap(), vec![3, 1]);
        assert_eq!(c.decode(&[3, 1]).unwrap(), BigUint::from(1u32));
        assert_eq!(c.decode(&[1, 1]), Err(Error::WrongComposition));
        assert_eq!(c.decode(&[1, 5]), Err(Error::WrongComposition));
        assert!(matches!(c.decode(&[1]), Err(Error::WrongLength { .. })));

        let c = CcdmCodec::new(comp(&[2, 2]));
        let outs: Vec<Vec<u32>> = (0..4u32)
            .map(|w| c.encode(&BigUint::from(w)).unwrap())
            .collect();
        for (i, o) in outs.iter().enumerate() {
            assert_eq!(o.iter().filter(|&&a| a == 1).count(), 2);
            assert!(outs[..i].iter().all(|p| p != o));
        }
    }

    /// Enumerate every sequence of a composition in lexicographic order.
    use std::collections::HashSet;

    fn all_sequences(
        amps: &[u32],
        counts: &mut Vec<u64>,
        prefix: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if counts.iter().all(|&c| c == 0) {
            out.push(prefix.clone());
            return;
        }
        for i in 0..amps.len() {
            if counts[i] > 0 {
                counts[i] -= 1;
                prefix.push(amps[i]);
                all_sequences(amps, counts, prefix, out);
                prefix.pop();
                counts[i] += 1;
            }
        }
    }

    #[test]
    fn exhaustive_roundtrip_small_n() {
        for counts in [
            vec![1, 1],
            vec![2, 2],
            vec![3, 2, 1],
            vec![4, 3, 2, 1],
            vec![6, 4, 2],
            vec![4, 3, 2, 1, 1],
            vec![7, 5],
        ] {
            let c = comp(&counts);
            let codec = CcdmCodec::new(c.clone());
            let mut list = Vec::new();
            all_sequences(
                c.amplitudes(),
                &mut counts.clone(),
                &mut Vec::new(),
                &mut list,
            );
            assert_eq!(BigUint::from(list.len()), c.multinomial());
            let seqs: HashSet<Vec<u32>> = list.into_iter().collect();
            let mut prev: Option<Vec<u32>> = None;
            for w in 0..1u64 << codec.input_bits() {
                let w = BigUint::from(w);
                let s = codec.encode(&w).unwrap();
                assert!(seqs.contains(&s));
                assert_eq!(codec.decode(&s).unwrap(), w);
                if let Some(p) = prev {
                    assert!(p < s, "order preserving");
                }
                prev = Some(s);
            }
            // sequences outside the image are rejected, never mis-decoded
            let image: HashSet<_> = (0..1u64 << codec.input_bits())
                .map(|w| codec.encode(&BigUint::from(w)).unwrap())
                .collect();
            for s in &seqs {
                if !image.contains(s) {
                    assert_eq!(codec.decode(s), Err(Error::NotInCodebook));
                }
            }
        }
    }

    #[test]
    fn rate_close_to_entropy_at_6000() {
        let a = ask(16);
        let nu = fit_mb_entropy(&a, 2.25).unwrap();
        let d = MbDistribution::new(&a, nu).unwrap();
        let c = Composition::quantize(&d, 6000).unwrap();
        let codec = CcdmCodec::new(c.clone());
        let h = c.entropy();
        assert!(codec.rate() <= h);
        assert!(h - codec.rate() < 0.02, "gap {}", h - codec.rate());
    }

    #[test]
    fn bit_packing() {
        let bits = vec![true, false, true, true];
        let w = word_from_bits(&bits);
        assert_eq!(w, BigUint::from(0b1011u32));
        assert_eq!(bits_from_word(&w, 4), bits);
        assert_eq!(
            bits_from_word(&w, 6),
            vec![false, false, true, false, true, true]
        );
    }

    #[test]
    fn composition_csv() {
        let mut buf = Vec::new();
        comp(&[3, 1]).write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "amplitude,count\n1,3\n3,1\n"
        );
    }
}
