use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("p = {0} is not prime")]
    NotPrime(u64),
    #[error("p = {0}: characteristic 2 is not supported, p must be odd")]
    EvenCharacteristic(u64),
    #[error("extension degree n = {0} is outside 1..=4")]
    DegreeTooLarge(u32),
    #[error("field order q = {q} exceeds the limit 2^20")]
    OrderTooLarge { q: u64 },
    #[error("zero has no multiplicative inverse")]
    InverseOfZero,
    #[error("element {value} is not in 0..{q}")]
    ElementOutOfRange { value: u64, q: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("search space of {size} points exceeds the limit {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },
    #[error("family parameter j must be nonzero")]
    ZeroParameter,
    #[error("dimension d = {0} is too small (need d >= {1})")]
    DimensionTooSmall(usize, usize),
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("quadratic form matrix is not symmetric")]
    NotSymmetric,
    #[error("quadratic form is degenerate (determinant 0)")]
    DegenerateForm,
    #[error("variety is empty")]
    EmptyVariety,
    #[error("polynomial is not diagonal of the form sum a_j x_j^s with every a_j nonzero")]
    NotDiagonal,
    #[error("exponent s = {s} is divisible by the characteristic p = {p}")]
    ExponentDivisibleByCharacteristic { s: u32, p: u32 },
    #[error("exponent s = {0} must be at least 2")]
    ExponentTooSmall(u32),
    #[error("point set contains a duplicate point (encoding {0})")]
    DuplicatePoint(usize),
    #[error("point encoding {point} is outside the space of size {size}")]
    PointOutOfRange { point: usize, size: usize },

    #[error("operation budget exceeded: {needed} > {limit}")]
    BudgetExceeded { needed: u128, limit: u128 },
    #[error("k = {0} is odd; k-energy is defined only for even k")]
    OddK(usize),
    #[error("invalid k = {0}")]
    InvalidK(usize),
    #[error("shift set X is empty")]
    EmptyX,
    #[error("count table total {got} differs from the expected {expected}")]
    InconsistentTotal { expected: String, got: String },
    #[error("exact count overflowed 128 bits")]
    CountOverflow,

    #[error("subset size {size} exceeds variety size {available}")]
    SizeExceedsVariety { size: usize, available: usize },
    #[error("subset of size {size} is below the hypothesis bound {bound:.4}")]
    SubsetTooSmall { size: usize, bound: f64 },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("numerical cross-check failed: {0}")]
    CrossCheck(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
