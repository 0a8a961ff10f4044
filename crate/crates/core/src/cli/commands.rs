use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use super::{CliError, ExperimentConfig};
use crate::ccdm::{bits_from_word, word_from_bits, CcdmCodec, Composition, MbDistribution};
use crate::channel::{add_noise, moment_ratio, SnrSpec};
use crate::constellation::AskAlphabet;
use crate::fmt::{db2, sig6};
use crate::lut::LutDm;
use crate::pas::{
    block_rng, derive_seed, draw_symbols, lut_modes, uniform_mode, write_mode_table, CodeRate,
    DmConfig, PasMode, Scheme,
};
use crate::rates::{
    achievable_rate, exact_rate_oracle, gaussian_capacity, DecodingMetric, MetricKind,
};

/// Demapper used for each scheme in sweeps.
pub fn metric_for(scheme: Scheme) -> MetricKind {
    match scheme {
        Scheme::Pas4d4d => MetricKind::Bmd4d,
        Scheme::Pas4d2d => MetricKind::Bmd2d,
        Scheme::PasNd1d | Scheme::Uniform => MetricKind::Bmd1d,
    }
}

fn k_or_nu(mode: &PasMode) -> String {
    match mode.dm {
        DmConfig::Lut { k } => k.to_string(),
        DmConfig::Ccdm { nu, .. } => sig6(nu),
        DmConfig::None => String::new(),
    }
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: String,
    pub m: Option<usize>,
    pub k_or_nu: String,
    pub snr_db: f64,
    pub rate_bits_per_4d: f64,
    pub stderr: f64,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

/// Runs every (mode, SNR) cell and appends Gaussian capacity rows.
///
/// Cells are independent: cell `(i, j)` uses seed `derive_seed(seed, [i, j])`
/// for its symbols and noise, so the rows do not depend on scheduling.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    let modes = config.validate()?;
    let snrs = config.snr.points();
    let sources = modes
        .iter()
        .map(PasMode::source)
        .collect::<crate::Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize)> = (0..modes.len())
        .flat_map(|i| (0..snrs.len()).map(move |j| (i, j)))
        .collect();
    let rows: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(i, j)| -> Result<Vec<SweepRow>, CliError> {
            let mode = &modes[i];
            let src = &sources[i];
            let snr = SnrSpec::from_db(snrs[j])?;
            let seed = derive_seed(config.seed, &[i as u64, j as u64]);
            let xs = draw_symbols(src, config.samples, derive_seed(seed, &[0]))?;
            let ys = add_noise(&xs, snr, derive_seed(seed, &[1]))?;
            let kind = metric_for(mode.scheme);
            let metric = DecodingMetric::new(kind, src, snr.sigma2())?;
            let est = achievable_rate(&xs, &ys, &metric)?;
            let mut out = vec![SweepRow {
                scheme: mode.scheme.to_string(),
                m: Some(mode.m),
                k_or_nu: k_or_nu(mode),
                snr_db: snrs[j],
                rate_bits_per_4d: est.rate,
                stderr: est.stderr,
                samples: Some(est.samples),
                seed: Some(seed),
            }];
            if config.oracle {
                match exact_rate_oracle(src, snr.sigma2(), kind) {
                    Ok(r) => out.push(SweepRow {
                        scheme: format!("{}:oracle", mode.scheme),
                        m: Some(mode.m),
                        k_or_nu: k_or_nu(mode),
                        snr_db: snrs[j],
                        rate_bits_per_4d: r,
                        stderr: 0.0,
                        samples: None,
                        seed: None,
                    }),
                    Err(crate::Error::TooLarge { .. }) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<SweepRow> = rows.into_iter().flatten().collect();
    for &db in &snrs {
        let c = gaussian_capacity(SnrSpec::from_db(db)?);
        rows.push(SweepRow {
            scheme: "CAPACITY".into(),
            m: None,
            k_or_nu: String::new(),
            snr_db: db,
            rate_bits_per_4d: 2.0 * c,
            stderr: 0.0,
            samples: None,
            seed: None,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "scheme,M,k_or_nu,snr_db,rate_bits_per_4d,rate_bpqs,stderr,K,seed"
    )?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.scheme,
            opt(r.m.map(|m| m.to_string())),
            r.k_or_nu,
            db2(r.snr_db),
            sig6(r.rate_bits_per_4d),
            sig6(r.rate_bits_per_4d / 2.0),
            sig6(r.stderr),
            opt(r.samples.map(|k| k.to_string())),
            opt(r.seed.map(|s| s.to_string())),
        )?;
    }
    Ok(())
}

/// Runs a sweep and writes its CSV.
pub fn cmd_sweep<W: Write>(config: &ExperimentConfig, out: W) -> Result<usize, CliError> {
    let rows = run_sweep(config)?;
    write_sweep_csv(&rows, out)?;
    Ok(rows.len())
}

/// Writes the mode table of one `(M, Rc)` and returns the modes.
pub fn cmd_modes<W: Write>(m: usize, rate: CodeRate, out: W) -> Result<Vec<PasMode>, CliError> {
    let modes = lut_modes(m, rate)?;
    write_mode_table(&modes, out)?;
    Ok(modes)
}

/// Matcher to exercise in [`cmd_roundtrip`].
#[derive(Debug, Clone, PartialEq)]
pub enum RoundtripSpec {
    /// Every word of every listed `k`.
    Lut { m: usize, ks: Vec<u32> },
    /// Random words through a CCDM on `MB(nu)` quantized to length `n`.
    /// With `corrupt`, one output block is altered before decoding.
    Ccdm {
        m: usize,
        nu: f64,
        n: u64,
        blocks: usize,
        seed: u64,
        corrupt: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundtripReport {
    pub checked: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl RoundtripReport {
    fn fail(&mut self, what: String) {
        self.failures += 1;
        self.first_failure.get_or_insert(what);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

/// Encodes and decodes, writing one summary line per matcher. A report with
/// failures is still returned; the caller decides the exit status.
pub fn cmd_roundtrip<W: Write>(
    spec: &RoundtripSpec,
    mut out: W,
) -> Result<RoundtripReport, CliError> {
    let mut report = RoundtripReport::default();
    match spec {
        RoundtripSpec::Lut { m, ks } => {
            let ask = AskAlphabet::new(*m)?;
            for &k in ks {
                let dm = LutDm::new(&ask, k)?;
                let before = report.failures;
                let mut seen = std::collections::HashSet::new();
                for w in 0..1u64 << k {
                    report.checked += 1;
                    let t = dm.encode(w)?;
                    if !seen.insert(t) {
                        report.fail(format!("LUT M={m} k={k}: word {w} repeats tuple {:?}", t.0));
                        continue;
                    }
                    match dm.decode(&t) {
                        Ok(v) if v == w => {}
                        Ok(v) => report.fail(format!("LUT M={m} k={k}: word {w} decoded as {v}")),
                        Err(e) => report.fail(format!("LUT M={m} k={k}: word {w}: {e}")),
                    }
                }
                let n = 1u64 << k;
                writeln!(
                    out,
                    "LUT M={m} k={k}: {}/{n} pass",
                    n - (report.failures - before)
                )?;
            }
        }
        RoundtripSpec::Ccdm {
            m,
            nu,
            n,
            blocks,
            seed,
            corrupt,
        } => {
            let ask = AskAlphabet::new(*m)?;
            let comp = Composition::quantize(&MbDistribution::new(&ask, *nu)?, *n)?;
            let codec = CcdmCodec::new(comp.clone());
            let kbits = codec.input_bits();
            let results: Vec<Option<String>> = (0..*blocks)
                .into_par_iter()
                .map(|b| {
                    let mut rng = block_rng(*seed, b);
                    let bits: Vec<bool> = (0..kbits).map(|_| rng.gen()).collect();
                    let word = word_from_bits(&bits);
                    let mut seq = match codec.encode(&word) {
                        Ok(s) => s,
                        Err(e) => return Some(format!("block {b}: encode failed: {e}")),
                    };
                    if let Some(bad) = composition_mismatch(&comp, &seq) {
                        return Some(format!("block {b}: {bad}"));
                    }
                    if *corrupt && b == 0 {
                        corrupt_block(&mut seq);
                    }
                    match codec.decode(&seq) {
                        Ok(w) if w == word && bits_from_word(&w, kbits) == bits => None,
                        Ok(_) => Some(format!("block {b}: decoded word differs from input")),
                        Err(e) => Some(format!("block {b}: decode failed: {e}")),
                    }
                })
                .collect();
            for r in results {
                report.checked += 1;
                if let Some(msg) = r {
                    report.fail(format!("CCDM M={m} n={n}: {msg}"));
                }
            }
            writeln!(
                out,
                "CCDM M={m} n={n} k={kbits}: {}/{} blocks pass",
                report.checked - report.failures,
                report.checked
            )?;
        }
    }
    if let Some(f) = &report.first_failure {
        writeln!(out, "first failure: {f}")?;
    }
    Ok(report)
}

fn composition_mismatch(comp: &Composition, seq: &[u32]) -> Option<String> {
    if seq.len() as u64 != comp.n() {
        return Some(format!("output length {} != {}", seq.len(), comp.n()));
    }
    for (a, &c) in comp.amplitudes().iter().zip(comp.counts()) {
        let got = seq.iter().filter(|&&s| s == *a).count() as u64;
        if got != c {
            return Some(format!("amplitude {a} occurs {got} times, expected {c}"));
        }
    }
    None
}

/// Swaps the first two differing symbols.
fn corrupt_block(seq: &mut [u32]) {
    if let Some(j) = (1..seq.len()).find(|&j| seq[j] != seq[0]) {
        seq.swap(0, j);
    }
}

/// Modes listed by `kurtosis` when none are given.
pub fn default_kurtosis_modes() -> Result<Vec<PasMode>, CliError> {
    let r = CodeRate::new(13, 16)?;
    Ok(vec![
        uniform_mode(2)?,
        uniform_mode(4)?,
        uniform_mode(8)?,
        uniform_mode(16)?,
        PasMode::lut(Scheme::Pas4d4d, 16, 5, r)?,
        PasMode::lut(Scheme::Pas4d4d, 16, 7, r)?,
        PasMode::lut(Scheme::Pas4d4d, 16, 9, r)?,
        PasMode::ccdm_for_se(16, 3.0, 6000, r)?,
        PasMode::ccdm_for_se(16, 4.0, 6000, r)?,
        PasMode::ccdm_for_se(16, 5.0, 6000, r)?,
    ])
}

/// Writes `scheme,M,k_or_nu,SE_bpQs,phi` sorted by `phi`, and returns the
/// sorted `(mode, phi)` pairs.
pub fn cmd_kurtosis<W: Write>(
    modes: &[PasMode],
    mut out: W,
) -> Result<Vec<(PasMode, f64)>, CliError> {
    let mut rows = modes
        .iter()
        .map(|md| Ok((md.clone(), moment_ratio(&md.source()?))))
        .collect::<crate::Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    writeln!(out, "scheme,M,k_or_nu,SE_bpQs,phi")?;
    for (md, phi) in &rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            md.scheme,
            md.m,
            k_or_nu(md),
            sig6(md.se()),
            sig6(*phi)
        )?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::{ModeSpec, SnrGrid};

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            seed: 5,
            samples: 2000,
            oracle: false,
            out: None,
            snr: SnrGrid {
                start_db: 4.0,
                stop_db: 6.0,
                step_db: 1.0,
            },
            modes: vec![
                ModeSpec::lut(Scheme::Pas4d4d, 8, 4, "2/3"),
                ModeSpec::lut(Scheme::Pas4d2d, 8, 4, "2/3"),
                ModeSpec::uniform(4),
            ],
        }
    }

    #[test]
    fn sweep_rows_and_determinism() {
        let c = small_config();
        let mut a = Vec::new();
        let rows = cmd_sweep(&c, &mut a).unwrap();
        assert_eq!(rows, 3 * 3 + 3);
        let mut b = Vec::new();
        cmd_sweep(&c, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scheme,M,k_or_nu,snr_db,rate_bits_per_4d,rate_bpqs,stderr,K,seed"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&first[..4], &["PAS-4D-4D", "8", "4", "4.00"]);
        assert_eq!(first[7], "2000");
        assert!(text.lines().last().unwrap().starts_with("CAPACITY,,,6.00,"));
    }

    #[test]
    fn oracle_rows() {
        let mut c = small_config();
        c.oracle = true;
        c.samples = 20_000;
        c.modes.truncate(1);
        c.snr.stop_db = 4.0;
        let rows = run_sweep(&c).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].scheme, "PAS-4D-4D:oracle");
        assert!((rows[0].rate_bits_per_4d - rows[1].rate_bits_per_4d).abs() < 3.0 * rows[0].stderr);
    }

    #[test]
    fn invalid_config_is_a_config_error() {
        let mut c = small_config();
        c.snr.step_db = -1.0;
        let e = run_sweep(&c).unwrap_err();
        assert_eq!(e.exit_code(), crate::cli::EXIT_CONFIG);
    }

    #[test]
    fn modes_table() {
        let mut out = Vec::new();
        let modes = cmd_modes(16, "13/16".parse().unwrap(), &mut out).unwrap();
        assert_eq!(modes.len(), 12);
        assert_eq!(modes.first().unwrap().se(), 1.0);
        assert_eq!(modes.last().unwrap().se(), 6.5);
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 13);
        assert_eq!(
            cmd_modes(4, CodeRate::new(1, 1).unwrap(), Vec::new())
                .unwrap()
                .len(),
            4
        );
        let e = cmd_modes(16, CodeRate::new(1, 2).unwrap(), Vec::new()).unwrap_err();
        assert_eq!(e.exit_code(), crate::cli::EXIT_CONFIG);
    }

    #[test]
    fn lut_roundtrip_report() {
        let mut out = Vec::new();
        let r = cmd_roundtrip(&RoundtripSpec::Lut { m: 16, ks: vec![9] }, &mut out).unwrap();
        assert!(r.passed());
        assert_eq!(r.checked, 512);
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "LUT M=16 k=9: 512/512 pass\n"
        );
    }

    #[test]
    fn ccdm_roundtrip_and_corruption() {
        let spec = |corrupt| RoundtripSpec::Ccdm {
            m: 16,
            nu: 0.05,
            n: 600,
            blocks: 8,
            seed: 1,
            corrupt,
        };
        let r = cmd_roundtrip(&spec(false), Vec::new()).unwrap();
        assert!(r.passed());
        assert_eq!(r.checked, 8);
        let mut out = Vec::new();
        let r = cmd_roundtrip(&spec(true), &mut out).unwrap();
        assert_eq!(r.failures, 1);
        assert!(r.first_failure.unwrap().contains("block 0"));
        assert!(String::from_utf8(out).unwrap().contains("first failure"));
    }

    #[test]
    fn kurtosis_table() {
        let mut out = Vec::new();
        let rows = cmd_kurtosis(&default_kurtosis_modes().unwrap(), &mut out).unwrap();
        assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(rows[0].1, 1.0);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("UNIFORM,4,,4.00000,1.32000"));
        let u16 = rows
            .iter()
            .find(|(m, _)| m.scheme == Scheme::Uniform && m.m == 16)
            .unwrap()
            .1;
        assert!(rows
            .iter()
            .filter(|(m, _)| m.scheme == Scheme::PasNd1d)
            .all(|(_, phi)| *phi > u16));
    }
}
