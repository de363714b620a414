use thiserror::Error;

/// Errors raised by the algebra, series, reduction and integrability layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("tower is not a field: zero divisor {witness}")]
    ZeroDivisor { witness: String },
    #[error("undeclared Galois generator {0}")]
    UndeclaredGenerator(String),
    #[error("invalid tower: {0}")]
    InvalidTower(String),
    #[error("no solution in the coefficient field")]
    NoSolution,
    #[error("solver bounds exceeded: {0}")]
    DegreeBoundExceeded(String),
    #[error("not expandable at {0}")]
    NotExpandable(String),
    #[error("integration incomplete: {0}")]
    IntegrationIncomplete(String),
    #[error("alphabet mismatch")]
    AlphabetMismatch,
    #[error("substituted series has a nonzero constant term")]
    NonzeroConstantTerm,
    #[error("map is not tangent to the identity")]
    NotTangentToIdentity,
    #[error("vector field is not tangent to the curve (component {component}: residual {residual})")]
    NotTangent { component: usize, residual: String },
    #[error("tangential speed vanishes identically along the curve")]
    TangentiallySingular,
    #[error("gauge matrix is singular")]
    SingularGauge,
    #[error("linear part is not diagonal after gauge (entry {row},{col}: {value})")]
    NotDiagonalAfterGauge { row: usize, col: usize, value: String },
    #[error("system is not time reduced")]
    NotTimeReduced,
    #[error("order {0} exceeds the available nonlinear table")]
    OrderExceedsTable(usize),
    #[error("non-Fuchsian at {place}: pole order {order}")]
    NonFuchsian { place: String, order: String },
    #[error("base point {0} is singular")]
    BasePointSingular(String),
    #[error("rank deficiency: {0}")]
    RankDeficiency(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("Galois orbit incomplete: {0}")]
    OrbitIncomplete(String),
    #[error("precision loss at nu = {0}")]
    PrecisionLoss(usize),
    #[error("path passes near a singularity at s = {0}")]
    PathNearSingularity(String),
    #[error("gauge required: {0}")]
    GaugeRequired(String),
    #[error("certificate schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
