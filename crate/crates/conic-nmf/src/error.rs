use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A column that must be nonzero has zero norm. Data with zero columns
    /// cannot come from a family of cones, since every cone point is nonzero.
    #[error("column {0} has zero norm")]
    ZeroColumn(usize),

    /// The whole matrix is zero where a nonzero matrix is required.
    #[error("matrix is identically zero")]
    ZeroMatrix,

    /// Power iteration failed to converge; usually means the two leading
    /// singular values are nearly equal. Callers may retry with another
    /// start vector.
    #[error("power iteration did not converge within {max_iter} sweeps")]
    NoConvergence { max_iter: usize },

    /// Requested more singular values (or factor components) than min(F, N).
    #[error("k = {k} exceeds min(rows, cols) = {max}")]
    KTooLarge { k: usize, max: usize },

    /// More clusters requested than there are columns.
    #[error("k = {k} exceeds the number of columns {n}")]
    KExceedsN { k: usize, n: usize },

    /// Cone membership is undefined for the zero vector.
    #[error("the zero vector belongs to no cone")]
    ZeroVector,

    /// The pairwise separation condition is vacuous for fewer than two cones.
    #[error("at least two cones are required")]
    SingleCone,

    /// Orthant containment needs a strictly positive basis vector.
    #[error("basis entry {0} is not strictly positive")]
    NonPositiveBasis(usize),

    /// The enclosing-cone solver could not certify feasibility within its
    /// iteration budget.
    #[error("enclosing-cone solver failed to certify feasibility (max violation {violation:.3e})")]
    Infeasible { violation: f64 },

    /// Equiangular basis construction needs F >= K + 1 dimensions.
    #[error("ambient dimension {f} is too small; need at least {need}")]
    DimensionTooSmall { f: usize, need: usize },

    /// Invalid candidate range for rank estimation.
    #[error("invalid range: {0}")]
    RangeInvalid(String),

    /// The spectrum vanishes inside the candidate range.
    #[error("singular value sigma_{0} is zero; matrix rank is below the candidate range")]
    RankDeficient(usize),

    /// Operand shapes do not conform.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A generator or solver configuration violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A text input (CSV, MatrixMarket, labels, key-value config) failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
