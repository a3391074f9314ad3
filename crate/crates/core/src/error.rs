use thiserror::Error;

/// Failure classes surfaced by the engine.
///
/// `Validation` means the input data breaks a structural law (d² ≠ 0, shape
/// violation, scalar outside the coefficient ring, malformed table, …).
/// `Obstruction` means the requested construction provably does not exist
/// over the ring (a homotopy fill or lift fails, with a witness).
/// `Undecided` means a search exhausted its budget without either a
/// certificate or a separating invariant.
/// `Truncation` means the truncation degree is too small to even pose the
/// question.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("validation failure: {0}")]
    Validation(String),
    #[error("obstruction: {0}")]
    Obstruction(String),
    #[error("undecided: {0}")]
    Undecided(String),
    #[error("insufficient truncation: {0}")]
    Truncation(String),
}

impl EngineError {
    pub fn validation(msg: impl Into<String>) -> Self {
        EngineError::Validation(msg.into())
    }
    pub fn obstruction(msg: impl Into<String>) -> Self {
        EngineError::Obstruction(msg.into())
    }
    pub fn undecided(msg: impl Into<String>) -> Self {
        EngineError::Undecided(msg.into())
    }
    pub fn truncation(msg: impl Into<String>) -> Self {
        EngineError::Truncation(msg.into())
    }
}
