//! Deterministic evaluation of the rate expectation by Gauss-Hermite
//! quadrature over the noise.

use std::collections::{BTreeMap, HashMap};
use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;
use rayon::prelude::*;

use super::metric::{DecodingMetric, MetricKind, Scratch};
use crate::channel::normalize;
use crate::constellation::{AmplitudeTuple, Point4D};
use crate::error::{Error, Result};
use crate::source::{AmplitudeLaw, ShapedSource};

/// Nodes per real dimension.
pub const ORACLE_NODES: usize = 40;
/// Largest constellation accepted by the 4D quadrature.
pub const ORACLE_LIMIT: usize = 4096;
/// Tensor nodes with a smaller normalized weight are dropped.
const PRUNE: f64 = 1e-16;

/// Nodes `u` and weights `w` with `E[f(Z)] = sum w f(sqrt(2) sigma u)` for
/// `Z ~ N(0, sigma^2)`.
fn hermite_rule(nodes: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(nodes.max(1)).expect("nonzero");
    let rule = GaussHermite::new(n);
    let norm = std::f64::consts::PI.sqrt();
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(u, w)| (u, w / norm))
        .collect()
}

/// Achievable rate in bits per 4D symbol, `[H - E(summand)]+`, with the
/// expectation over the source and the noise computed by quadrature.
///
/// Sources with a product amplitude law factor into four identical real
/// dimensions; table laws use a pruned tensor rule in 4D.
pub fn exact_rate_oracle(source: &ShapedSource, sigma2: f64, kind: MetricKind) -> Result<f64> {
    exact_rate_oracle_with(source, sigma2, kind, ORACLE_NODES)
}

/// [`exact_rate_oracle`] with an explicit number of nodes per dimension.
pub fn exact_rate_oracle_with(
    source: &ShapedSource,
    sigma2: f64,
    kind: MetricKind,
    nodes: usize,
) -> Result<f64> {
    let m = summand_moments(source, sigma2, kind, nodes, true)?;
    Ok((source.entropy() - m.mean).max(0.0))
}

/// Mean and variance of the per-sample summand `-log2(q(x,y)/sum_a q(a,y))`
/// in bits per 4D symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummandMoments {
    pub mean: f64,
    pub variance: f64,
}

impl SummandMoments {
    /// Standard error of a `K`-sample Monte-Carlo mean.
    pub fn stderr(&self, samples: usize) -> f64 {
        (self.variance.max(0.0) / samples as f64).sqrt()
    }
}

/// Exact summand moments by quadrature, with [`ORACLE_NODES`] nodes.
pub fn exact_summand_moments(
    source: &ShapedSource,
    sigma2: f64,
    kind: MetricKind,
) -> Result<SummandMoments> {
    summand_moments(source, sigma2, kind, ORACLE_NODES, true)
}

fn summand_moments(
    source: &ShapedSource,
    sigma2: f64,
    kind: MetricKind,
    nodes: usize,
    orbits: bool,
) -> Result<SummandMoments> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidNoiseVariance(sigma2));
    }
    match source.law() {
        AmplitudeLaw::Product { pmf } => {
            // four i.i.d. real dimensions
            let [m1, m2] = summand_1d(source, pmf, sigma2, kind, nodes)?;
            Ok(SummandMoments {
                mean: 4.0 * m1,
                variance: 4.0 * (m2 - m1 * m1),
            })
        }
        AmplitudeLaw::Table { .. } => {
            if source.size() > ORACLE_LIMIT {
                return Err(Error::TooLarge {
                    size: source.size(),
                    limit: ORACLE_LIMIT,
                    what: "the 4D quadrature oracle",
                });
            }
            let [m1, m2] = summand_4d(source, sigma2, kind, nodes, orbits)?;
            Ok(SummandMoments {
                mean: m1,
                variance: m2 - m1 * m1,
            })
        }
    }
}

fn lse(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// One real dimension of a product source, evaluated directly.
fn summand_1d(
    source: &ShapedSource,
    pmf: &[f64],
    sigma2: f64,
    kind: MetricKind,
    nodes: usize,
) -> Result<[f64; 2]> {
    let scale = normalize(source)?;
    let ask = source.ask();
    let levels: Vec<f64> = ask.levels().iter().map(|&c| scale * c as f64).collect();
    let logp: Vec<f64> = ask
        .levels()
        .iter()
        .map(|&c| (pmf[(c.unsigned_abs() / 2) as usize] / 2.0).ln())
        .collect();
    let labels = source.labeling().labels_by_level_index();
    let width = ask.bits_per_dim();
    let sigma = sigma2.sqrt();
    let rule = hermite_rule(nodes);
    let m = levels.len();

    let mut ell = vec![0.0; m];
    let mut total = [0.0; 2];
    for j in 0..m {
        if logp[j] == f64::NEG_INFINITY {
            continue;
        }
        let mut e = [0.0; 2];
        for &(u, w) in &rule {
            let y = levels[j] + std::f64::consts::SQRT_2 * sigma * u;
            for (a, l) in ell.iter_mut().enumerate() {
                let d = y - levels[a];
                *l = -d * d / (2.0 * sigma2);
            }
            let joint = |a: usize| logp[a] + ell[a];
            let log_ratio = match kind {
                MetricKind::Smd4d => joint(j) - lse((0..m).map(joint)),
                _ => {
                    let q: Vec<[f64; 2]> = (0..width)
                        .map(|b| {
                            [0u32, 1].map(|v| {
                                lse((0..m).filter(|&a| (labels[a] >> b) & 1 == v).map(joint))
                            })
                        })
                        .collect();
                    let metric = |a: usize| -> f64 {
                        (0..width)
                            .map(|b| q[b as usize][((labels[a] >> b) & 1) as usize])
                            .sum()
                    };
                    metric(j) - lse((0..m).filter(|&a| logp[a] > f64::NEG_INFINITY).map(metric))
                }
            };
            let v = -log_ratio / std::f64::consts::LN_2;
            e[0] += w * v;
            e[1] += w * v * v;
        }
        let p = logp[j].exp();
        total[0] += p * e[0];
        total[1] += p * e[1];
    }
    Ok(total)
}

fn permutations(kind: MetricKind) -> Vec<[usize; 4]> {
    match kind {
        MetricKind::Bmd2d => {
            let mut out = Vec::new();
            for outer in [[0, 1], [1, 0]] {
                for a in [[0, 1], [1, 0]] {
                    for b in [[0, 1], [1, 0]] {
                        let slices = [a, b];
                        let mut p = [0; 4];
                        for s in 0..2 {
                            for k in 0..2 {
                                p[2 * s + k] = 2 * outer[s] + slices[s][k];
                            }
                        }
                        out.push(p);
                    }
                }
            }
            out
        }
        _ => {
            let mut out = Vec::new();
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        for d in 0..4 {
                            let p = [a, b, c, d];
                            let mut seen = [false; 4];
                            p.iter().for_each(|&i| seen[i] = true);
                            if seen.iter().all(|&s| s) {
                                out.push(p);
                            }
                        }
                    }
                }
            }
            out
        }
    }
}

fn permute(t: &[u32; 4], p: &[usize; 4]) -> [u32; 4] {
    std::array::from_fn(|d| t[p[d]])
}

/// Quadrant tuples with their probability mass, merged over permutation
/// orbits when the law and the metric are invariant.
fn representatives(source: &ShapedSource, kind: MetricKind, orbits: bool) -> Vec<([u32; 4], f64)> {
    let table = source.quadrant_table();
    let lookup: HashMap<[u32; 4], f64> = table.iter().map(|(t, p)| (t.0, *p)).collect();
    let perms = permutations(kind);
    let invariant = orbits
        && table.iter().all(|(t, p)| {
            perms.iter().all(|q| {
                lookup
                    .get(&permute(&t.0, q))
                    .is_some_and(|r| (r - p).abs() <= 1e-12 * p)
            })
        });
    if !invariant {
        return table.into_iter().map(|(t, p)| (t.0, p)).collect();
    }
    let mut merged: BTreeMap<[u32; 4], f64> = BTreeMap::new();
    for (t, p) in table {
        let canon = perms
            .iter()
            .map(|q| permute(&t.0, q))
            .min()
            .expect("nonempty");
        *merged.entry(canon).or_default() += p;
    }
    merged.into_iter().collect()
}

fn tensor_rule(nodes: usize) -> Vec<([f64; 4], f64)> {
    let rule = hermite_rule(nodes);
    let mut out = Vec::new();
    for &(u0, w0) in &rule {
        if w0 < PRUNE {
            continue;
        }
        for &(u1, w1) in &rule {
            let w01 = w0 * w1;
            if w01 < PRUNE {
                continue;
            }
            for &(u2, w2) in &rule {
                let w012 = w01 * w2;
                if w012 < PRUNE {
                    continue;
                }
                for &(u3, w3) in &rule {
                    let w = w012 * w3;
                    if w >= PRUNE {
                        out.push(([u0, u1, u2, u3], w));
                    }
                }
            }
        }
    }
    out
}

fn summand_4d(
    source: &ShapedSource,
    sigma2: f64,
    kind: MetricKind,
    nodes: usize,
    orbits: bool,
) -> Result<[f64; 2]> {
    let metric = DecodingMetric::new(kind, source, sigma2)?;
    let scale = normalize(source)?;
    let spread = std::f64::consts::SQRT_2 * sigma2.sqrt();
    let grid = tensor_rule(nodes);
    // the metric and the noise are sign symmetric: the positive quadrant suffices
    let parts: Vec<[f64; 2]> = representatives(source, kind, orbits)
        .par_iter()
        .map(|(t, mass)| {
            let x = Point4D::from_amplitudes(&AmplitudeTuple(*t), 0);
            let mut sc = Scratch::default();
            let mut e = [0.0; 2];
            for (u, w) in &grid {
                let y: [f64; 4] = std::array::from_fn(|d| scale * x.0[d] as f64 + spread * u[d]);
                let v = metric.summand(&x, &y, &mut sc);
                e[0] += w * v;
                e[1] += w * v * v;
            }
            [mass * e[0], mass * e[1]]
        })
        .collect();
    Ok(parts
        .iter()
        .fold([0.0; 2], |a, p| [a[0] + p[0], a[1] + p[1]]))
}
