//! Error taxonomy shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar or structural argument is out of its documented range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Operands have incompatible lengths or shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Operands live in different scalar fields (real vs complex).
    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    /// A NaN or infinity was found where finite data is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An SPD factorization hit a non-positive pivot.
    #[error("singular system: non-positive pivot at index {pivot}")]
    SingularSystem { pivot: usize },

    /// The initializer cannot produce a usable starting point.
    #[error("initialization error: {0}")]
    Initialization(String),
}
