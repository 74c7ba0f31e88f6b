use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("alphabet dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid sequence point: {0}")]
    InvalidPoint(String),

    #[error("operation requires a periodic point")]
    NotPeriodic,

    #[error("operation requires a window point")]
    NotWindow,

    #[error("invalid subshift specification: {0}")]
    InvalidSpec(String),

    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("diagram requires p > m (p = {p}, m = {m})")]
    DiagramRequiresPrimeAboveGap { p: u64, m: u64 },

    #[error("sampling failed after {attempts} attempts: no point satisfied {constraint}")]
    SamplingFailed { constraint: String, attempts: usize },

    #[error("forbidden words must share one length >= 2")]
    UnequalWordLengths,

    #[error("count overflowed the 128-bit range")]
    Overflow,

    #[error("no period-{p} points exist when p divides the gap {gap}")]
    PrimeDividesGap { p: u64, gap: u64 },

    #[error("witness construction insufficient for this δ: best gap {best} < {delta}")]
    WitnessInsufficient { best: String, delta: String },

    #[error("tower level must be >= {min}, got {level}")]
    InvalidLevel { level: usize, min: usize },

    #[error("domain shrinks to empty: {0}")]
    EmptyDomain(String),

    #[error("anchor table missing index {0}")]
    MissingAnchor(usize),

    #[error("level {level}: {source}")]
    AtLevel { level: usize, source: Box<Error> },

    #[error("invalid tower specification: {0}")]
    InvalidTower(String),

    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),

    #[error("coindex defined only for free actions")]
    NotFree,

    #[error("action is not simplicial: {0}")]
    NotSimplicial(String),

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("bound rule {rule}: {reason}")]
    BoundRule { rule: String, reason: String },

    #[error("invalid finite system: {0}")]
    InvalidSystem(String),

    #[error("system has {size} points, above the exhaustive cap {cap}; use the greedy mode")]
    TooLarge { size: usize, cap: usize },

    #[error("not a valid {n}-marker: {reason}")]
    InvalidMarker { n: usize, reason: String },

    #[error("system must be fixed-point free")]
    NotFixedPointFree,

    #[error("ε must be positive")]
    NonPositiveEpsilon,

    #[error("ε = {epsilon} violates 0 < ε < min d(x, Tx) = {bound}")]
    EpsilonTooLarge { epsilon: String, bound: String },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid cover: {0}")]
    InvalidCover(String),

    #[error("enumeration cap exceeded ({count} > {cap}); use the bound mode")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("arity error: {0}")]
    Arity(String),
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::AtLevel { level, source: Box::new(self) }
    }
}
