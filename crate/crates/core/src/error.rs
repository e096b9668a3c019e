//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Error`]. Variants are
//! grouped loosely by the subsystem that raises them; a few (e.g.
//! [`Error::Domain`]) are shared.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    // ----- expression parsing and evaluation -----
    #[error("syntax error at byte offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{func}` expects {expected} argument(s), got {got}")]
    Arity {
        func: String,
        expected: usize,
        got: usize,
    },
    #[error("domain error: {func}({arg}) is undefined")]
    Domain { func: String, arg: f64 },
    #[error("`{func}` is not differentiable at {arg}")]
    NondifferentiablePoint { func: String, arg: f64 },
    #[error("variable `{name}` is not bound")]
    UnboundVariable { name: String },

    // ----- geometry -----
    #[error("point violates the manifold constraint by {deviation:.3e}")]
    PointOffManifold { deviation: f64 },
    #[error("warping function is nonpositive ({value:.6e}) at t = {t}")]
    NonpositiveWarping { value: f64, t: f64 },
    #[error("field evaluation failed: {0}")]
    FieldEvaluationFailure(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("level {level} is singular (profile vanishes or lies outside the image interval)")]
    SingularLevel { level: f64 },
    #[error("Newton projection onto level {level} did not converge")]
    ProjectionDivergence { level: f64 },

    // ----- transnormal catalog -----
    #[error("Hahn condition violated: {0}")]
    HahnConditionViolated(String),
    #[error("unsupported number of principal curvatures ell = {0} (built-ins cover 1 and 2)")]
    UnsupportedEll(u32),
    #[error("bad split: {0}")]
    BadSplit(String),
    #[error("could not sample regular points away from the focal set")]
    NoRegularPoints,

    // ----- 1-D and 2-D reduction -----
    #[error("hypothesis check failed: {0}")]
    HypothesisRejected(String),
    #[error("implicit branch lost near t = {t}: {message}")]
    BranchLoss { t: f64, message: String },
    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("integrand sign violation at t = {t} (U/a <= 0 in the interior)")]
    SignViolation { t: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("evaluation outside the solution domain (t = {t})")]
    OutsideDomain { t: f64 },
    #[error("initial strip root solve failed at zeta = {zeta}: {message}")]
    StripRootFailure { zeta: f64, message: String },
    #[error("transversality lost at zeta = {zeta}: |T' H_p - S' H_q| = {value:.3e}")]
    TransversalityLoss { zeta: f64, value: f64 },
    #[error("Hamiltonian drift {drift:.3e} exceeds the conservation tolerance at sigma = {sigma}")]
    DriftViolation { drift: f64, sigma: f64 },
    #[error("characteristic fan degenerates at the base point (Jacobian {jacobian:.3e})")]
    CoverageFailure { jacobian: f64 },
    #[error("inversion of the characteristic map failed at (t, s) = ({t}, {s})")]
    InversionFailure { t: f64, s: f64 },
    #[error("point (t, s) = ({t}, {s}) lies outside the covered region")]
    OutsideCoverage { t: f64, s: f64 },

    // ----- verification -----
    #[error("no valid samples could be drawn")]
    NoValidSamples,
}
