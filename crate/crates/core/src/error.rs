use thiserror::Error;

/// Errors shared across the workspace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tag mismatch: {0}")]
    TagMismatch(String),
    #[error("unsupported tag: {0}")]
    UnsupportedTag(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("numerically singular input: {0}")]
    SingularInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("window separation margin {margin:.6} is not > 1; rescale the lattice first")]
    MarginTooSmall { margin: f64 },
    #[error("dedup collision: two distinct elements share a hash cell ({0:?} vs {1:?})")]
    DedupCollision(Vec<f64>, Vec<f64>),
    #[error("no chain connects classes {0} and {1} on this window")]
    Disconnected(usize, usize),
    #[error("size mismatch: left has {0} points, right has {1}")]
    SizeMismatch(usize, usize),
    #[error("correspondence is not a bijection: {0}")]
    NonBijective(String),
    #[error("broken chain linkage at step {0}")]
    BrokenChain(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
