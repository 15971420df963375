//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received a value outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input data violates a structural invariant (ordering, ranges, ids).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Tensor or layer dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An operation that needs at least one element got none.
    #[error("empty input: {0}")]
    Empty(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    Diverged { iteration: usize, loss: f64 },

    /// A checkpoint could not be read or was written by an unknown version.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
