use thiserror::Error;

/// Malformed text encodings (bit strings, hashes, transcripts).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("missing ':' separator")]
    MissingSeparator,
    #[error("invalid length field {0:?}")]
    BadLength(String),
    #[error("expected {expected} hex digits, found {found}")]
    HexLength { expected: usize, found: usize },
    #[error("invalid hex digit {0:?}")]
    HexDigit(char),
    #[error("padding bits must be zero")]
    NonZeroPadding,
    #[error("index set is not strictly ascending")]
    UnsortedIndices,
    #[error("transcript: {0}")]
    Transcript(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HashError {
    #[error("hash dimensions must be non-zero (got {rows}x{cols})")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("hash output length {rows} exceeds input length {cols}")]
    Expanding { rows: usize, cols: usize },
    #[error("input has {found} bits, hash expects {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("Y has {available} non-erased coordinates, need {needed}; typicality check skipped?")]
    InsufficientNonErased { available: usize, needed: usize },
    #[error("{pool} pool exhausted: need {needed}, have {available}")]
    PoolExhausted {
        pool: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("string length {found} does not match k = {expected}")]
    StringLength { expected: usize, found: usize },
    #[error("coordinate {index} of the decoding set is erased at Bob")]
    ErasedInDecodingSet { index: u32 },
    #[error("Bob aborted {attempts} times in a row (max_resends = {max_resends})")]
    ResendLimitExceeded { attempts: usize, max_resends: usize },
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("row {row} of {name} sums to {sum}, not 1")]
    NotStochastic {
        name: &'static str,
        row: usize,
        sum: f64,
    },
    #[error("{name} has a negative or non-finite entry")]
    BadEntry { name: &'static str },
    #[error("{name} has {found} input rows, expected {expected}")]
    InputAlphabet {
        name: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("input distribution sums to {0}, not 1")]
    BadInputDistribution(f64),
    #[error("rate constants must be finite")]
    NonFinite,
    #[error("grid resolution {0} is too coarse")]
    CoarseGrid(usize),
    #[error("empty feasible set")]
    EmptyFeasibleSet,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no samples")]
    Empty,
    #[error("need at least {needed} runs, got {found}")]
    TooFewRuns { needed: usize, found: usize },
    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("runs mix different configurations")]
    MixedConfigs,
    #[error("attacker {attacker} cannot be evaluated on this run: {reason}")]
    ShapeMismatch {
        attacker: &'static str,
        reason: String,
    },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
