use thiserror::Error;

/// Domain errors shared across the library. File-format errors live in
/// [`crate::io::FileError`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("seed string must be non-empty")]
    EmptySeed,
    #[error("uniform {0} is outside the open interval (0, 1)")]
    UniformOutOfRange(f64),
    #[error("order keys are undefined for zero-weight items")]
    ZeroWeight,
    #[error("invalid sampling policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid rational {0:?}: expected \"numerator/denominator\"")]
    InvalidRatio(String),
    #[error("population must contain at least one entry")]
    EmptyPopulation,
    #[error("duplicate query in population: {0:?}")]
    DuplicateQuery(String),
    #[error("zero-weight query in population: {0:?} (zero impressions means absent)")]
    ZeroWeightQuery(String),
    #[error("invalid query text {0:?}: must be non-empty, without tab or newline")]
    InvalidQueryText(String),
    #[error("injected uniform source is missing query {0:?}")]
    MissingUniform(String),
    #[error("samples have different nominal sizes: {0} vs {1}")]
    SampleSizeMismatch(usize, usize),
    #[error("sample contains no items")]
    EmptySample,
    #[error("sampled query {0:?} is not part of the population")]
    QueryNotInPopulation(String),
    #[error("population of {size} queries exceeds the enumeration limit of {limit}")]
    PopulationTooLarge { size: usize, limit: usize },
    #[error("oracle sample size {m} must be between 1 and the population size {size}")]
    InvalidOracleSize { m: usize, size: usize },
    #[error("at least {min} trials required, got {got}")]
    TooFewTrials { got: usize, min: usize },
    #[error("replacement fraction {0} must be in (0, 1]")]
    InvalidFraction(String),
    #[error("population has {population} queries, fewer than the {sample}-item sample to refill")]
    PopulationSmallerThanSample { population: usize, sample: usize },
    #[error("target period {target} is outside the population sequence of length {len}")]
    TargetPeriodOutOfRange { target: usize, len: usize },
    #[error("invalid population spec: {0}")]
    InvalidSpec(String),
    #[error("timeline needs at least {min} periods, got {got}")]
    TooFewPeriods { got: usize, min: usize },
}
