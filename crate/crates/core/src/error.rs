use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("index {index} out of range for {what} (size {size})")]
    Index {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("numerical divergence in {0}")]
    Divergence(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("target at distance {distance} is beyond arm reach {reach}")]
    UnreachableTarget { distance: f64, reach: f64 },

    #[error("target coincides with the arm center")]
    DegenerateTarget,

    #[error("gain calibration failed: {0}")]
    Calibration(String),

    #[error("replay buffer holds {size} transitions, batch needs {needed}")]
    NotReady { size: usize, needed: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            got,
        }
    }
}
