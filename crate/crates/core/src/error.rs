use thiserror::Error;

/// Everything that can go wrong while building models, operators, bounds and distances.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteinError {
    #[error("NonPositiveProb: atom {index} has probability {prob}, expected > 0")]
    NonPositiveProb { index: usize, prob: f64 },
    #[error("DuplicateAtom: value {value} appears more than once")]
    DuplicateAtom { value: f64 },
    #[error("SumNotOne: probabilities sum to {sum}, outside 1 ± 1e-9")]
    SumNotOne { sum: f64 },
    #[error("EmptyDistribution: a distribution needs at least one atom")]
    EmptyDistribution,
    #[error("NonFinite: {what} must be finite")]
    NonFinite { what: &'static str },
    #[error("EmptySequence: a sequence needs at least one coordinate")]
    EmptySequence,
    #[error("GridTooLarge: product grid has {size} outcomes, cap is {cap}")]
    GridTooLarge { size: u128, cap: usize },
    #[error("NonSymmetric: matrix entry ({row},{col}) differs from its transpose")]
    NonSymmetric { row: usize, col: usize },
    #[error("NonzeroDiagonal: diagonal entry {index} is {value}, expected 0")]
    NonzeroDiagonal { index: usize, value: f64 },
    #[error("BadArity: {0}")]
    BadArity(String),
    #[error("WindowOutOfRange: {0}")]
    WindowOutOfRange(String),
    #[error("ArityMismatch: functional expects {expected} coordinates, sequence has {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("AxisOutOfRange: axis {axis} with {n} coordinates")]
    AxisOutOfRange { axis: usize, n: usize },
    #[error("ShapeMismatch: tensors live on different grids")]
    ShapeMismatch,
    #[error("NotCentered: E[F] = {mean}, expected 0")]
    NotCentered { mean: f64 },
    #[error("DegenerateVariance: Var(F) = {variance}, expected > 0")]
    DegenerateVariance { variance: f64 },
    #[error("NotAWeightedSum: the functional is not a sum of single-coordinate terms")]
    NotAWeightedSum,
    #[error("NotNormalized: E[F^2] = {second_moment}, expected 1")]
    NotNormalized { second_moment: f64 },
    #[error("NotATwoRun: the functional is not a 2-run")]
    NotATwoRun,
    #[error("BadMomentBound: x0 = {x0} is below max E|X_i|^4 = {required}")]
    BadMomentBound { x0: f64, required: f64 },
    #[error("UnsupportedKind: {0}")]
    UnsupportedKind(String),
    #[error("NotIntegerValued: the functional does not take values in {{0, 1, 2, ...}}")]
    NotIntegerValued,
    #[error("NonPositiveTheta: theta = {0}, expected > 0")]
    NonPositiveTheta(f64),
    #[error("UnsupportedBoundForm: {0}")]
    UnsupportedBoundForm(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, SteinError>;
