//! Decoding metrics `q(x, y)` for symbol-metric and bit-metric decoding.
//!
//! All evaluation is in the log domain with unnormalized Gaussian kernels
//! `exp(-(y - a)^2 / (2 sigma^2))`; constants cancel in the ratio
//! `q(x, y) / sum_a q(a, y)`.
//!
//! Every source has uniform independent signs, so sums over the
//! constellation factor into a sum over quadrant tuples of per-dimension
//! sign sums. This keeps the cost per sample at `O(|table|)` instead of
//! `O(16 |table| m)`.

use std::fmt;
use std::str::FromStr;

use crate::channel::normalize;
use crate::constellation::{Point4D, DIMS};
use crate::error::{Error, Result};
use crate::source::{AmplitudeLaw, ShapedSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// Symbol metric on the 4D law.
    Smd4d,
    /// Bit metric with bitwise marginals of the 4D law.
    Bmd4d,
    /// Bit metric per 2D slice using the slice marginals.
    Bmd2d,
    /// Bit metric per real dimension using the 1D marginals.
    Bmd1d,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Smd4d,
        MetricKind::Bmd4d,
        MetricKind::Bmd2d,
        MetricKind::Bmd1d,
    ];

    pub fn is_bit_metric(&self) -> bool {
        !matches!(self, MetricKind::Smd4d)
    }

    /// Coordinate groups decoded jointly.
    pub(crate) fn groups(&self) -> &'static [&'static [usize]] {
        match self {
            MetricKind::Smd4d | MetricKind::Bmd4d => &[&[0, 1, 2, 3]],
            MetricKind::Bmd2d => &[&[0, 1], &[2, 3]],
            MetricKind::Bmd1d => &[&[0], &[1], &[2], &[3]],
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Smd4d => "SMD-4D",
            MetricKind::Bmd4d => "BMD-4D",
            MetricKind::Bmd2d => "BMD-2D",
            MetricKind::Bmd1d => "BMD-1D",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "SMD-4D" | "SMD4D" | "SMD" => Ok(MetricKind::Smd4d),
            "BMD-4D" | "BMD4D" => Ok(MetricKind::Bmd4d),
            "BMD-2D" | "BMD2D" => Ok(MetricKind::Bmd2d),
            "BMD-1D" | "BMD1D" => Ok(MetricKind::Bmd1d),
            _ => Err(Error::Config(format!("unknown metric {s:?}"))),
        }
    }
}

/// Law over amplitude-index tuples of a group of coordinates.
#[derive(Debug, Clone)]
enum GroupLaw {
    /// `idx` holds `dims` amplitude indices per entry.
    Table { idx: Vec<u8>, logw: Vec<f64> },
    /// Same amplitude law in every coordinate of the group.
    Product { logp: Vec<f64> },
}

#[derive(Debug, Clone)]
struct Group {
    dims: Vec<usize>,
    law: GroupLaw,
}

fn logaddexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn logsumexp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Per-sample buffers, reused across calls.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    ell: Vec<f64>,
    pair: Vec<f64>,
    s: Vec<f64>,
    acc: Vec<f64>,
    base: Vec<f64>,
    h: Vec<f64>,
    hpair: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DecodingMetric {
    kind: MetricKind,
    source: ShapedSource,
    sigma2: f64,
    levels: Vec<f64>,
    half: usize,
    amp_bits: u32,
    amp_labels: Vec<u32>,
    groups: Vec<Group>,
    // the 4D constellation: weighted by the pmf for SMD, indicator for BMD
    support: GroupLaw,
    // log quadrant probability per dense amplitude-index tuple (SMD numerator)
    log_quadrant: Vec<f64>,
}

fn table_group(source: &ShapedSource, dims: &[usize]) -> GroupLaw {
    let AmplitudeLaw::Table { tuples, probs } = source.law() else {
        unreachable!("table law expected")
    };
    let mut merged: std::collections::BTreeMap<Vec<u8>, f64> = Default::default();
    for (t, p) in tuples.iter().zip(probs) {
        let key: Vec<u8> = dims.iter().map(|&d| (t.0[d] / 2) as u8).collect();
        *merged.entry(key).or_default() += p;
    }
    let mut idx = Vec::with_capacity(merged.len() * dims.len());
    let mut logw = Vec::with_capacity(merged.len());
    for (k, p) in merged {
        idx.extend(k);
        logw.push(p.ln());
    }
    GroupLaw::Table { idx, logw }
}

impl DecodingMetric {
    /// Builds the metric for a source at noise variance `sigma2` per real
    /// dimension. The source is scaled to unit 2D energy internally.
    pub fn new(kind: MetricKind, source: &ShapedSource, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidNoiseVariance(sigma2));
        }
        let scale = normalize(source)?;
        let ask = source.ask();
        let half = ask.num_amplitudes();
        let width = ask.bits_per_dim();
        let levels = ask.levels().iter().map(|&l| scale * l as f64).collect();
        let labels = source.labeling().labels_by_level_index();
        // amplitude bits of the positive level with amplitude index i
        let amp_labels = (0..half).map(|i| labels[half + i]).collect();

        let groups = if kind.is_bit_metric() {
            kind.groups()
                .iter()
                .map(|dims| Group {
                    dims: dims.to_vec(),
                    law: match source.law() {
                        AmplitudeLaw::Product { pmf } => GroupLaw::Product {
                            logp: pmf.iter().map(|p| p.ln()).collect(),
                        },
                        AmplitudeLaw::Table { .. } => table_group(source, dims),
                    },
                })
                .collect()
        } else {
            Vec::new()
        };

        let support = match source.law() {
            AmplitudeLaw::Product { pmf } => GroupLaw::Product {
                logp: if kind.is_bit_metric() {
                    pmf.iter()
                        .map(|&p| if p > 0.0 { 0.0 } else { f64::NEG_INFINITY })
                        .collect()
                } else {
                    pmf.iter().map(|p| p.ln()).collect()
                },
            },
            AmplitudeLaw::Table { tuples, probs } => GroupLaw::Table {
                idx: tuples
                    .iter()
                    .flat_map(|t| t.0.map(|a| (a / 2) as u8))
                    .collect(),
                logw: if kind.is_bit_metric() {
                    vec![0.0; probs.len()]
                } else {
                    probs.iter().map(|p| p.ln()).collect()
                },
            },
        };

        let log_quadrant = match source.law() {
            AmplitudeLaw::Product { .. } => Vec::new(),
            AmplitudeLaw::Table { .. } => {
                let mut v = vec![f64::NEG_INFINITY; half.pow(4)];
                for (t, p) in source.quadrant_table() {
                    v[crate::lut::dense_index(half, &t)] = p.ln();
                }
                v
            }
        };

        Ok(DecodingMetric {
            kind,
            source: source.clone(),
            sigma2,
            levels,
            half,
            amp_bits: width - 1,
            amp_labels,
            groups,
            support,
            log_quadrant,
        })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn source(&self) -> &ShapedSource {
        &self.source
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Normalized level values, ascending.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    fn pos(&self, i: usize) -> usize {
        self.half + i
    }

    fn neg(&self, i: usize) -> usize {
        self.half - 1 - i
    }

    fn level_index(&self, c: i32) -> usize {
        ((c + 2 * self.half as i32 - 1) / 2) as usize
    }

    /// `ln(q(x, y) / sum_a q(a, y))` for a transmitted grid point `x`.
    pub fn log_ratio(&self, x: &Point4D, y: &[f64; 4], sc: &mut Scratch) -> f64 {
        let m = self.levels.len();
        let half = self.half;
        sc.ell.resize(DIMS * m, 0.0);
        sc.pair.resize(DIMS * half, 0.0);
        let inv = 1.0 / (2.0 * self.sigma2);
        for d in 0..DIMS {
            for (j, &l) in self.levels.iter().enumerate() {
                let e = y[d] - l;
                sc.ell[d * m + j] = -e * e * inv;
            }
            for i in 0..half {
                sc.pair[d * half + i] =
                    logaddexp(sc.ell[d * m + self.pos(i)], sc.ell[d * m + self.neg(i)]);
            }
        }
        let xi: [usize; 4] = x.0.map(|c| self.level_index(c));

        if !self.kind.is_bit_metric() {
            let num_kernel: f64 = (0..DIMS).map(|d| sc.ell[d * m + xi[d]]).sum();
            let log_p = match self.source.law() {
                AmplitudeLaw::Product { pmf } => {
                    x.0.iter()
                        .map(|&c| pmf[(c.unsigned_abs() / 2) as usize].ln())
                        .sum()
                }
                AmplitudeLaw::Table { .. } => {
                    self.log_quadrant[crate::lut::dense_index(half, &x.amplitudes())]
                }
            };
            let den = lse_over(&self.support, &sc.pair, half, &mut sc.base);
            return log_p + num_kernel - den;
        }

        // S[d][i]: log of the group law mass with coordinate d at amplitude i,
        // weighted by the kernels of every coordinate in the group
        sc.s.clear();
        sc.s.resize(DIMS * half, f64::NEG_INFINITY);
        for g in &self.groups {
            group_marginals(g, &sc.pair, half, &mut sc.s, &mut sc.acc, &mut sc.base);
        }

        sc.h.resize(DIMS * m, 0.0);
        sc.hpair.resize(DIMS * half, 0.0);
        for d in 0..DIMS {
            let s = &sc.s[d * half..(d + 1) * half];
            let pair = &sc.pair[d * half..(d + 1) * half];
            let ell = &sc.ell[d * m..(d + 1) * m];
            // sign bit: 0 for positive levels
            let sign_q = [
                logsumexp((0..half).map(|i| s[i] + ell[self.pos(i)] - pair[i])),
                logsumexp((0..half).map(|i| s[i] + ell[self.neg(i)] - pair[i])),
            ];
            let mut amp_term = vec![0.0; half];
            for b in 0..self.amp_bits {
                let q = [0u32, 1].map(|v| {
                    logsumexp(
                        (0..half)
                            .filter(|&i| (self.amp_labels[i] >> b) & 1 == v)
                            .map(|i| s[i]),
                    )
                });
                for (i, t) in amp_term.iter_mut().enumerate() {
                    *t += q[((self.amp_labels[i] >> b) & 1) as usize];
                }
            }
            for i in 0..half {
                let hp = sign_q[0] + amp_term[i];
                let hn = sign_q[1] + amp_term[i];
                sc.h[d * m + self.pos(i)] = hp;
                sc.h[d * m + self.neg(i)] = hn;
                sc.hpair[d * half + i] = logaddexp(hp, hn);
            }
        }
        let num: f64 = (0..DIMS).map(|d| sc.h[d * m + xi[d]]).sum();
        let den = lse_over(&self.support, &sc.hpair, half, &mut sc.base);
        num - den
    }

    /// Summand of the rate estimate in bits: `-log2(q(x,y) / sum_a q(a,y))`.
    pub fn summand(&self, x: &Point4D, y: &[f64; 4], sc: &mut Scratch) -> f64 {
        -self.log_ratio(x, y, sc) / std::f64::consts::LN_2
    }
}

/// `ln sum_t exp(logw_t + sum_d f[d][t_d])` over a 4D law.
fn lse_over(law: &GroupLaw, f: &[f64], half: usize, base: &mut Vec<f64>) -> f64 {
    match law {
        GroupLaw::Product { logp } => (0..DIMS)
            .map(|d| logsumexp((0..half).map(|i| logp[i] + f[d * half + i])))
            .sum(),
        GroupLaw::Table { idx, logw } => {
            base.clear();
            base.extend(idx.chunks_exact(DIMS).zip(logw).map(|(t, w)| {
                w + f[t[0] as usize]
                    + f[half + t[1] as usize]
                    + f[2 * half + t[2] as usize]
                    + f[3 * half + t[3] as usize]
            }));
            let mx = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if mx == f64::NEG_INFINITY {
                return mx;
            }
            mx + base.iter().map(|b| (b - mx).exp()).sum::<f64>().ln()
        }
    }
}

/// Fills `s[d][i]` for the coordinates of one group.
fn group_marginals(
    g: &Group,
    pair: &[f64],
    half: usize,
    s: &mut [f64],
    acc: &mut Vec<f64>,
    base: &mut Vec<f64>,
) {
    let n = g.dims.len();
    match &g.law {
        GroupLaw::Product { logp } => {
            let totals: Vec<f64> = g
                .dims
                .iter()
                .map(|&d| logsumexp((0..half).map(|i| logp[i] + pair[d * half + i])))
                .collect();
            let all: f64 = totals.iter().sum();
            for (k, &d) in g.dims.iter().enumerate() {
                let others = all - totals[k];
                for i in 0..half {
                    s[d * half + i] = logp[i] + pair[d * half + i] + others;
                }
            }
        }
        GroupLaw::Table { idx, logw } => {
            base.clear();
            base.extend(idx.chunks_exact(n).zip(logw).map(|(t, w)| {
                w + t
                    .iter()
                    .zip(&g.dims)
                    .map(|(&i, &d)| pair[d * half + i as usize])
                    .sum::<f64>()
            }));
            // separate shift per (coordinate, amplitude) so no marginal underflows
            acc.clear();
            acc.resize(2 * n * half, f64::NEG_INFINITY);
            let (mx, sum) = acc.split_at_mut(n * half);
            for (t, &b) in idx.chunks_exact(n).zip(base.iter()) {
                for (k, &i) in t.iter().enumerate() {
                    let c = &mut mx[k * half + i as usize];
                    *c = c.max(b);
                }
            }
            sum.fill(0.0);
            for (t, &b) in idx.chunks_exact(n).zip(base.iter()) {
                for (k, &i) in t.iter().enumerate() {
                    let j = k * half + i as usize;
                    sum[j] += (b - mx[j]).exp();
                }
            }
            for (k, &d) in g.dims.iter().enumerate() {
                for i in 0..half {
                    let j = k * half + i;
                    s[d * half + i] = if sum[j] > 0.0 {
                        sum[j].ln() + mx[j]
                    } else {
                        f64::NEG_INFINITY
                    };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccdm::MbDistribution;
    use crate::constellation::AskAlphabet;
    use crate::lut::LutDm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation over the explicit point list, straight from the
    /// definitions of the four metrics.
    fn naive_log_ratio(
        kind: MetricKind,
        src: &ShapedSource,
        s2: f64,
        x: &Point4D,
        y: &[f64; 4],
    ) -> f64 {
        let scale = normalize(src).unwrap();
        let pts = src.points();
        let lab = src.labeling();
        let w = lab.width();
        let kern = |a: &Point4D, dims: &[usize]| -> f64 {
            dims.iter()
                .map(|&d| {
                    let e = y[d] - scale * a.0[d] as f64;
                    (-e * e / (2.0 * s2)).exp()
                })
                .product()
        };
        let q = |a: &Point4D| -> f64 {
            match kind {
                MetricKind::Smd4d => src.prob(a) * kern(a, &[0, 1, 2, 3]),
                _ => {
                    let la = lab.point_to_label(a).unwrap();
                    let mut prod = 1.0;
                    for dims in kind.groups() {
                        // marginal over the group coordinates
                        let mut marg: std::collections::HashMap<Vec<i32>, f64> = Default::default();
                        for (p, pr) in &pts {
                            let key: Vec<i32> = dims.iter().map(|&d| p.0[d]).collect();
                            *marg.entry(key).or_default() += pr;
                        }
                        for &d in dims.iter() {
                            for bit in 0..w {
                                let pos = lab.width() * (3 - d as u32) + bit;
                                let want = (la >> pos) & 1;
                                let mut sum = 0.0;
                                for (key, pr) in &marg {
                                    let mut full = Point4D([1, 1, 1, 1]);
                                    for (k, &dd) in dims.iter().enumerate() {
                                        full.0[dd] = key[k];
                                    }
                                    let lf = lab.point_to_label(&full).unwrap();
                                    if (lf >> pos) & 1 == want {
                                        sum += pr * kern(&full, dims);
                                    }
                                }
                                prod *= sum;
                            }
                        }
                    }
                    prod
                }
            }
        };
        let den: f64 = pts.iter().map(|(a, _)| q(a)).sum();
        (q(x) / den).ln()
    }

    fn sources() -> Vec<ShapedSource> {
        let a4 = AskAlphabet::new(4).unwrap();
        let a8 = AskAlphabet::new(8).unwrap();
        vec![
            ShapedSource::from_lut(&LutDm::new(&a4, 2).unwrap()),
            ShapedSource::from_lut(&LutDm::new(&a8, 3).unwrap()),
            ShapedSource::uniform(&a4),
            ShapedSource::uniform(&AskAlphabet::binary()),
            ShapedSource::product(&a4, MbDistribution::new(&a4, 0.1).unwrap().pmf().to_vec())
                .unwrap(),
            ShapedSource::from_table(
                &a4,
                vec![
                    crate::constellation::AmplitudeTuple([1, 1, 1, 1]),
                    crate::constellation::AmplitudeTuple([3, 1, 1, 3]),
                    crate::constellation::AmplitudeTuple([1, 3, 1, 1]),
                ],
                vec![0.5, 0.3, 0.2],
            )
            .unwrap(),
        ]
    }

    #[test]
    fn matches_naive_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sc = Scratch::default();
        for src in sources() {
            let pts = src.points();
            for kind in MetricKind::ALL {
                for s2 in [0.02, 0.3, 1.5] {
                    let metric = DecodingMetric::new(kind, &src, s2).unwrap();
                    for _ in 0..6 {
                        let x = pts[rng.gen_range(0..pts.len())].0;
                        let y: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.8..1.8));
                        let a = metric.log_ratio(&x, &y, &mut sc);
                        let b = naive_log_ratio(kind, &src, s2, &x, &y);
                        assert!(
                            (a - b).abs() < 1e-9 * (1.0 + b.abs()),
                            "{kind} s2={s2}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ratios_are_log_probabilities() {
        // summing exp(log_ratio) over every candidate x gives 1
        let mut sc = Scratch::default();
        for src in sources() {
            for kind in MetricKind::ALL {
                let metric = DecodingMetric::new(kind, &src, 0.2).unwrap();
                let y = [0.3, -0.7, 0.1, 1.1];
                let total: f64 = src
                    .points()
                    .iter()
                    .map(|(x, _)| metric.log_ratio(x, &y, &mut sc).exp())
                    .sum();
                assert!((total - 1.0).abs() < 1e-12, "{kind}: {total}");
            }
        }
    }

    #[test]
    fn high_snr_does_not_underflow() {
        let a16 = AskAlphabet::new(16).unwrap();
        let src = ShapedSource::from_lut(&LutDm::new(&a16, 9).unwrap());
        let scale = normalize(&src).unwrap();
        let mut sc = Scratch::default();
        let x = Point4D([7, -5, 1, 3]);
        for kind in MetricKind::ALL {
            let metric = DecodingMetric::new(kind, &src, 1e-6).unwrap();
            let y = x.0.map(|c| scale * c as f64 + 1e-4);
            let r = metric.log_ratio(&x, &y, &mut sc);
            assert!(r.is_finite() && r.abs() < 1e-12, "{kind}: {r}");
            // far from every point the ratio is still finite
            let r = metric.log_ratio(&x, &[3.0, -3.0, 3.0, 3.0], &mut sc);
            assert!(r.is_finite(), "{kind}: {r}");
        }
    }

    #[test]
    fn origin_is_uniform_over_sign_orbit() {
        let a4 = AskAlphabet::new(4).unwrap();
        let src = ShapedSource::from_lut(&LutDm::new(&a4, 2).unwrap());
        let metric = DecodingMetric::new(MetricKind::Smd4d, &src, 0.5).unwrap();
        let mut sc = Scratch::default();
        let t = crate::constellation::AmplitudeTuple([1, 1, 3, 1]);
        let vals: Vec<f64> = (0..16u8)
            .map(|s| metric.log_ratio(&Point4D::from_amplitudes(&t, s), &[0.0; 4], &mut sc))
            .collect();
        assert!(vals.iter().all(|v| (v - vals[0]).abs() < 1e-13));
    }

    #[test]
    fn bmd2d_equals_bmd4d_on_slice_product() {
        // uniform over the full quadrant factorizes across slices
        let a4 = AskAlphabet::new(4).unwrap();
        let src = ShapedSource::from_lut(&LutDm::new(&a4, 4).unwrap());
        let m4 = DecodingMetric::new(MetricKind::Bmd4d, &src, 0.3).unwrap();
        let m2 = DecodingMetric::new(MetricKind::Bmd2d, &src, 0.3).unwrap();
        let mut sc = Scratch::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (x, _) in src.points().iter().step_by(17) {
            let y: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
            let a = m4.log_ratio(x, &y, &mut sc);
            let b = m2.log_ratio(x, &y, &mut sc);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_noise() {
        let src = ShapedSource::uniform(&AskAlphabet::new(4).unwrap());
        assert!(DecodingMetric::new(MetricKind::Smd4d, &src, 0.0).is_err());
        assert!(DecodingMetric::new(MetricKind::Smd4d, &src, f64::NAN).is_err());
    }

    #[test]
    fn kind_parsing() {
        for k in MetricKind::ALL {
            assert_eq!(k.to_string().parse::<MetricKind>().unwrap(), k);
        }
        assert!("bmd-3d".parse::<MetricKind>().is_err());
    }
}
