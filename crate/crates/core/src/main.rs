use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pas4d::ccdm::fit_mb_entropy;
use pas4d::cli::{
    cmd_kurtosis, cmd_modes, cmd_roundtrip, cmd_sweep, default_kurtosis_modes, resolve_output,
    CliError, ExperimentConfig, Overrides, RoundtripSpec,
};
use pas4d::constellation::AskAlphabet;
use pas4d::pas::{gamma, CodeRate};

#[derive(Parser)]
#[command(
    name = "pas4d",
    version,
    about = "Probabilistic amplitude shaping experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Achievable rate versus SNR for the configured modes.
    Sweep(SweepArgs),
    /// Spectral-efficiency table of the LUT modes for one (M, Rc).
    Modes {
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, default_value = "13/16")]
        rate: String,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode/decode checks of the distribution matchers.
    Roundtrip {
        #[command(subcommand)]
        dm: RoundtripCmd,
    },
    /// Fourth-to-squared-second moment ratio per mode.
    Kurtosis {
        /// Experiment config whose modes are listed; a default set otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    snr_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_stop: Option<f64>,
    #[arg(long)]
    snr_step: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV path; relative paths go under $PAS4D_OUT_DIR when set.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RoundtripCmd {
    /// Every word of the 4D LUT.
    Lut {
        #[arg(long, default_value_t = 16)]
        m: usize,
        /// LUT input length; all k up to 12 if omitted.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Random blocks through a CCDM on a Maxwell-Boltzmann composition.
    Ccdm {
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, conflicts_with = "se")]
        nu: Option<f64>,
        /// Target SE in bpQs; sets the amplitude entropy to SE/2 - gamma.
        #[arg(long)]
        se: Option<f64>,
        #[arg(long, default_value = "13/16")]
        rate: String,
        #[arg(long, default_value_t = 6000)]
        n: u64,
        #[arg(long, default_value_t = 100)]
        blocks: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Alter one output block before decoding.
        #[arg(long)]
        corrupt: bool,
    },
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            let p = resolve_output(p);
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn parse_rate(s: &str) -> Result<CodeRate, CliError> {
    Ok(s.parse()?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(a) => {
            let mut config = ExperimentConfig::load(&a.config)?;
            config.apply(&Overrides {
                snr_start: a.snr_start,
                snr_stop: a.snr_stop,
                snr_step: a.snr_step,
                samples: a.samples,
                seed: a.seed,
                out: a.out,
            });
            config.validate()?;
            let path = config
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("sweep.csv"));
            let mut out = open_out(Some(&path))?;
            let rows = cmd_sweep(&config, &mut out)?;
            out.flush()?;
            eprintln!("wrote {rows} rows to {}", resolve_output(&path).display());
        }
        Command::Modes { m, rate, out } => {
            let mut w = open_out(out.as_deref())?;
            cmd_modes(m, parse_rate(&rate)?, &mut w)?;
            w.flush()?;
        }
        Command::Roundtrip { dm } => {
            let spec = match dm {
                RoundtripCmd::Lut { m, k } => {
                    let ks = match k {
                        Some(k) => vec![k],
                        None => {
                            let max =
                                pas4d::constellation::Labeling4D::new(&AskAlphabet::new(m)?).m_q();
                            (1..=max.min(12)).collect()
                        }
                    };
                    RoundtripSpec::Lut { m, ks }
                }
                RoundtripCmd::Ccdm {
                    m,
                    nu,
                    se,
                    rate,
                    n,
                    blocks,
                    seed,
                    corrupt,
                } => {
                    let nu = match (nu, se) {
                        (Some(nu), _) => nu,
                        (None, Some(se)) => {
                            let ask = AskAlphabet::new(m)?;
                            fit_mb_entropy(&ask, se / 2.0 - gamma(parse_rate(&rate)?, m)?)?
                        }
                        (None, None) => {
                            return Err(CliError::Invalid(pas4d::Error::Config(
                                "give --nu or --se".into(),
                            )))
                        }
                    };
                    RoundtripSpec::Ccdm {
                        m,
                        nu,
                        n,
                        blocks,
                        seed,
                        corrupt,
                    }
                }
            };
            let mut stdout = std::io::stdout().lock();
            let report = cmd_roundtrip(&spec, &mut stdout)?;
            if !report.passed() {
                return Err(CliError::Check(
                    report
                        .first_failure
                        .unwrap_or_else(|| "nothing checked".into()),
                ));
            }
        }
        Command::Kurtosis { config, out } => {
            let modes = match config {
                Some(p) => ExperimentConfig::load(&p)?
                    .modes
                    .iter()
                    .map(|m| m.build())
                    .collect::<pas4d::Result<Vec<_>>>()?,
                None => default_kurtosis_modes()?,
            };
            let mut w = open_out(out.as_deref())?;
            cmd_kurtosis(&modes, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
