use num_complex::Complex64;
use thiserror::Error;

use crate::dsl::ParseDiagnostic;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the evaluation pipeline.
///
/// Points of failure carry the complex location so that reports can name a
/// concrete node instead of a bare message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero at z = {z} in `{subexpr}`")]
    DivisionByZero { z: Complex64, subexpr: String },

    #[error("branch point hit at z = {z}")]
    BranchPointHit { z: Complex64 },

    #[error("non-finite value at z = {z} in `{subexpr}`")]
    NonFinite { z: Complex64, subexpr: String },

    #[error("parse error: {0}")]
    Parse(ParseDiagnostic),

    #[error("expression is not in the normalized class: {0}")]
    NotNormalized(String),

    #[error("h(0) = {h0} lies on the excluded ray (-inf, 0]")]
    ExcludedH0 { h0: Complex64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("|alpha| = {0:e} is below 1e-9")]
    AlphaTooSmall(f64),

    #[error("Re(alpha) = {0} <= 0: the integral diverges at the origin")]
    NonIntegrable(f64),

    #[error("integrand singular at node u = {node}")]
    IntegrandSingular { node: Complex64 },

    #[error("quadrature tolerance not met (estimated error {estimated:e})")]
    ToleranceNotMet { estimated: f64 },

    #[error("branch continuation unresolved along the path to z = {z}")]
    BranchTracking { z: Complex64 },

    #[error("chain bracket vanishes at z = {z}, t = {t}")]
    NonvanishingViolation { z: Complex64, t: f64 },

    #[error("denominator (1 - s)A + m vanishes for A = {a}")]
    DenominatorZero { a: Complex64 },

    #[error("w = 1 is a pole of (1 + w)/(1 - w)")]
    PoleAtOne,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),

    #[error("degenerate Jacobian at z = {z} (|F_z| <= 1e-12)")]
    DegenerateJacobian { z: Complex64 },

    #[error("f(z) = w0 on the probe circle of radius {r}")]
    OnCurve { r: f64 },

    #[error("winding number unresolved on radius {r}")]
    UnresolvedWinding { r: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("at sample z = {z}, t = {t}: {source}")]
    AtSample {
        z: Complex64,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl From<ParseDiagnostic> for Error {
    fn from(d: ParseDiagnostic) -> Self {
        Error::Parse(d)
    }
}
