use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum GbsError {
    /// A matrix or state failed a physicality check (symmetry, uncertainty
    /// relation, sub-unitarity, classicality, purity).
    #[error("unphysical input: {0}")]
    Unphysical(String),

    /// Dimensions of the supplied objects do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical routine failed (non-convergence, singular determinant).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The request exceeds the desk-scale budget this crate is built for.
    #[error("scale limit exceeded: {0}")]
    ScaleLimit(String),

    /// A persisted artifact (sample file, checkpoint, config) is malformed.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GbsError>;
