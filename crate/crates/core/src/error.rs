use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid ASK size {0}: must be a power of two and at least 4")]
    InvalidAskSize(usize),
    #[error("invalid Gray code width {0}")]
    InvalidWidth(u32),
    #[error("label {label:#x} does not fit in {bits} bits")]
    LabelOutOfRange { label: u32, bits: u32 },
    #[error("coordinate {0} is not a level of the alphabet")]
    OffGrid(i32),
    #[error("DM input length k = {k} out of range 1..={max}")]
    InvalidK { k: u32, max: u32 },
    #[error("word {word:#x} does not fit in {bits} bits")]
    WordOutOfRange { word: u64, bits: u32 },
    #[error("amplitude tuple {0:?} is not in the DM table")]
    NotInTable([u32; 4]),
    #[error("invalid amplitude {0}")]
    InvalidAmplitude(u32),
    #[error("Maxwell-Boltzmann parameter must be nonnegative, got {0}")]
    NegativeNu(f64),
    #[error("target entropy {target} outside (0, {max}]")]
    EntropyOutOfRange { target: f64, max: f64 },
    #[error("sequence does not match the codec composition")]
    WrongComposition,
    #[error("sequence is not a codeword of this matcher")]
    NotInCodebook,
    #[error("sequence length {got} differs from block length {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("invalid code rate {0}")]
    InvalidCodeRate(String),
    #[error("code rate {rate} too low for M = {m}: gamma = {gamma} < 0")]
    NegativeGamma { rate: String, m: usize, gamma: f64 },
    #[error("target SE {target} bpQs not achievable; nearest achievable: {below:?} / {above:?}")]
    UnreachableSe {
        target: f64,
        below: Option<f64>,
        above: Option<f64>,
    },
    #[error("target SE {target} bpQs must be below {bits} bits per QAM symbol")]
    UniformSeTooHigh { target: f64, bits: u32 },
    #[error("source has zero mean energy")]
    DegenerateSource,
    #[error("sample count must be positive")]
    EmptyStream,
    #[error("streams are misaligned: {0} vs {1} samples")]
    Misaligned(usize, usize),
    #[error("metric and stream were built for different sources")]
    SourceMismatch,
    #[error("noise variance must be positive and finite, got {0}")]
    InvalidNoiseVariance(f64),
    #[error("constellation of {size} points too large for {what} (limit {limit})")]
    TooLarge {
        size: usize,
        limit: usize,
        what: &'static str,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
