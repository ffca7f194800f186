use thiserror::Error;

/// Errors raised by the optimizer, geometry and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid hyper-parameters: {0}")]
    InvalidHyper(String),
    #[error("invalid search bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite fitness {value} at group {group}, particle {particle}")]
    NonFiniteFitness { group: usize, particle: usize, value: f64 },
    #[error("could not place obstacles after {attempts} attempts")]
    PlacementExhausted { attempts: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { what, expected, found })
    }
}
