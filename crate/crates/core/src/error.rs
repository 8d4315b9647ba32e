use thiserror::Error;

/// Errors raised by state construction, operator algebra and quadrature.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate bracket at q = 1; use the identity deformation (limit [x] = x)")]
    DegenerateBracket,
    #[error("invalid deformation parameter: {0}")]
    InvalidParameter(String),
    #[error("deformation table has non-positive or non-finite entry f({index}) = {value}")]
    NonPositiveTableEntry { index: usize, value: f64 },
    #[error("deformation table index {index} out of range (table covers n = 1..={len})")]
    TableIndexOutOfRange { index: usize, len: usize },
    #[error("line {line}: {message}")]
    TableParse { line: usize, message: String },
    #[error("radius undetermined: {0}")]
    RadiusUndetermined(String),
    #[error("unknown operator descriptor `{0}`")]
    UnknownOperator(String),
    #[error("no closed-form commutator known for [{0}, {1}]")]
    NoClosedForm(String, String),
    #[error("probe too close to truncation: amplitudes at the top two indices must vanish")]
    ProbeTooCloseToTruncation,
    #[error("charge mismatch: expected sector {expected}, found {found}")]
    ChargeMismatch { expected: i64, found: i64 },
    #[error("odd state undefined at ξ=0")]
    OddAtOrigin,
    #[error("|ξ| = {modulus} outside the normalizable region |ξ| < {radius}")]
    OutsideRadius { modulus: f64, radius: f64 },
    #[error("automatic truncation did not converge below nmax = {cap}")]
    TruncationDidNotConverge { cap: usize },
    #[error("insufficient angular nodes: {given} given, at least {required} required")]
    InsufficientNodes { given: usize, required: usize },
    #[error("ξ₁ must be non-zero for charge {0}")]
    ZeroModeAmplitude(i64),
    #[error("series not divisible by ξ^{0}")]
    NotDivisible(i64),
    #[error("closed-form mismatch in {quantity}: operator route {operator}, closed form {closed}")]
    ClosedFormMismatch { quantity: String, operator: f64, closed: f64 },
    #[error("correlation undefined at vacuum")]
    CorrelationUndefined,
    #[error("bessel K domain error: z = {0} must be positive")]
    BesselDomain(f64),
    #[error("radial quadrature failed moment m = {moment}: relative error {error:e}")]
    QuadratureMoment { moment: usize, error: f64 },
    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
