use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vehicle {vehicle} is collocated with the RSU at slot {slot}")]
    Collocated { vehicle: usize, slot: usize },

    #[error("decoding error probability is undefined for SINR {0}")]
    SinrDomain(f64),

    #[error("no SINR in [1e-12, 1e12] reaches error probability {0}")]
    NoBracket(f64),

    #[error("action space has {cardinality} joint assignments, above the limit of {limit}")]
    ActionSpaceTooLarge { cardinality: u128, limit: u128 },

    #[error("AoI state covers {actual} slots but {expected} were requested")]
    HorizonMismatch { expected: usize, actual: usize },

    #[error("AoI bounds coincide ({0}); the normalized AoI term is undefined")]
    DegenerateRange(f64),

    #[error("simplex did not terminate within {0} pivots")]
    SimplexCycling(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
