use thiserror::Error;

/// Errors raised by constructors and operations across the crate.
///
/// Certificate failures that are part of normal reporting (a tree that does
/// not verify, a refused witness search) are returned as values, not errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square or rows have unequal length: {0}")]
    Shape(String),
    #[error("distance ({0}, {1}) is negative, NaN or infinite")]
    BadDistance(usize, usize),
    #[error("nonzero diagonal entry at point {0}")]
    NonZeroDiagonal(usize),
    #[error("distinct points {0} and {1} are at distance zero")]
    ZeroDistance(usize, usize),
    #[error("asymmetric matrix at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("triangle inequality violated at ({0}, {1}, {2})")]
    Triangle(usize, usize, usize),
    #[error("graph is disconnected: point {0} is unreachable from point 0")]
    Disconnected(usize),
    #[error("point index {index} out of range for a space of {len} points")]
    PointOutOfRange { index: usize, len: usize },
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("{0} must be nonempty")]
    Empty(&'static str),
    #[error("scale must be a finite nonnegative number, got {0}")]
    BadScale(f64),
    #[error("family does not cover the space: point {0} is uncovered")]
    NotACover(usize),
    #[error("family has dimension {found} at the requested scale, above the bound {bound}")]
    DimensionTooHigh { found: i64, bound: i64 },
    #[error("disjointness precondition fails: points {x} and {y} at distance {dist} (required {required})")]
    NotDisjoint {
        x: usize,
        y: usize,
        dist: f64,
        required: f64,
    },
    #[error("map is not surjective: point {0} of the codomain has an empty fiber")]
    NotSurjective(usize),
    #[error("selection is not a right inverse: f(s({0})) != {0}")]
    BadSelection(usize),
    #[error("coarse control check failed: {0}")]
    Control(String),
    #[error("invalid group action: {0}")]
    GroupAction(String),
    #[error("component count {found} exceeds n = {n} (scale {scale})")]
    TooManyComponents { found: usize, n: usize, scale: f64 },
    #[error("invalid tree: {0}")]
    Tree(String),
    #[error("scale bookkeeping mismatch: {0}")]
    Scales(String),
    #[error("invalid measure: {0}")]
    Measure(String),
    #[error("mass threshold missed at stage {stage}: {mass} (needed {needed})")]
    MassThreshold {
        stage: &'static str,
        mass: f64,
        needed: f64,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
