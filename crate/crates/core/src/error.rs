use thiserror::Error;

/// Failure details attached to [`Error::NotConverged`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveFailure {
    /// Best iterate seen, indexed like the unknowns of the system.
    pub best_iterate: Vec<f64>,
    /// Relative residual after every inner iteration.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("SigmaZero: sigma must be nonzero")]
    SigmaZero,
    #[error("RhoOutOfRange: correlation {0} must satisfy -1 < rho < 1")]
    RhoOutOfRange(f64),
    #[error("NonpositiveKappaTheta: kappa = {kappa} and theta = {theta} must both be positive")]
    NonpositiveKappaTheta { kappa: f64, theta: f64 },
    #[error("NegativeC0: killing rate c0 = {0} must be nonnegative")]
    NegativeC0(f64),
    #[error("NegativeGamma: weight parameter gamma = {0} must be nonnegative")]
    NegativeGamma(f64),
    #[error("NonFiniteParameter: {0} is not a finite number")]
    NonFiniteParameter(&'static str),

    #[error("MissingDerivative: jet does not carry D_x^{a} D_y^{b}")]
    MissingDerivative { a: usize, b: usize },
    #[error("InsufficientJetOrder: field supplies order {available}, {required} required")]
    InsufficientJetOrder { required: usize, available: usize },

    #[error("NegativeY: point ({x}, {y}) lies below the axis")]
    NegativeY { x: f64, y: f64 },
    #[error("NonpositiveY: weight evaluated at y = {0} <= 0")]
    NonpositiveY(f64),
    #[error("InvalidDomain: {0}")]
    InvalidDomain(String),
    #[error("InvalidBall: {0}")]
    InvalidBall(String),

    #[error("EmptyMask: the region contains no quadrature points or nodes")]
    EmptyMask,
    #[error("MissingDerivatives: grid function carries order {available}, {required} required")]
    MissingDerivatives { required: usize, available: usize },
    #[error("UnsupportedTag: {0}")]
    UnsupportedTag(String),
    #[error("AlphaOutOfRange: Hoelder exponent {0} must lie in (0, 1)")]
    AlphaOutOfRange(f64),
    #[error("InvalidExponent: p = {0} must be >= 1")]
    InvalidExponent(f64),
    #[error("GridMismatch: grid functions live on different grids")]
    GridMismatch,

    #[error("NonpositiveBeta: weight exponent beta = {0} must be positive")]
    NonpositiveBeta(f64),
    #[error("HNotOnGrid: step {0} is not a nonzero multiple of the x-spacing")]
    HNotOnGrid(f64),
    #[error("EmptyResult: no node admits the shifted point")]
    EmptyResult,
    #[error("SupportTooClose: support lies within 2|h| of the non-degenerate boundary")]
    SupportTooClose,
    #[error("InvalidCoefficients: {0}")]
    InvalidCoefficients(String),
    #[error("GridTooCoarse: {0}")]
    GridTooCoarse(String),
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("OrderTooHigh: derivative order {0} exceeds the supported maximum of 4")]
    OrderTooHigh(usize),
    #[error("NotConverged: relative residual {final_residual:e} after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        final_residual: f64,
        failure: Box<SolveFailure>,
    },
    #[error("SingularSystem: {0}")]
    SingularSystem(String),

    #[error("RegionOutsideDomain: {0}")]
    RegionOutsideDomain(String),
    #[error("ZeroData: right side vanishes while the left side is {0:e}")]
    ZeroData(f64),

    #[error("Parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
