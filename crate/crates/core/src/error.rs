use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset} (chart dimension {dim})")]
    UnknownVariable {
        name: String,
        offset: usize,
        dim: usize,
    },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("domain error: {0}")]
    Domain(String),

    #[error("variance mismatch: {0}")]
    VarianceMismatch(String),
    #[error("slot {slot} out of range for rank {rank}")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular metric (condition estimate {condition:e})")]
    SingularMetric { condition: f64 },
    #[error("missing jet: {0}")]
    MissingJet(&'static str),
    #[error("connection has torsion (max |T| = {norm:e})")]
    HasTorsion { norm: f64 },
    #[error("curvature fails the first Bianchi identity (residual {residual:e})")]
    NotBianchi { residual: f64 },
    #[error("tensor is not antisymmetric in its form slots (residual {residual:e})")]
    NotAntisymmetric { residual: f64 },

    #[error("odd dimension {0}: complex structures need an even-dimensional chart")]
    OddDimension(usize),
    #[error("endomorphism does not square to -1 (residual {residual:e})")]
    NotAlmostComplex { residual: f64 },
    #[error("weight {0:?} is not dominant")]
    NotDominant(Vec<i64>),

    #[error("path leaves the chart domain at {point:?}: {reason}")]
    PathOutsideDomain { point: Vec<f64>, reason: String },
    #[error("adaptive step failed at t = {t}")]
    StepFailure { t: f64 },
    #[error("Cartan connection is not flat (loop holonomy {holonomy:e} > {tol:e})")]
    NotFlat { holonomy: f64, tol: f64 },
    #[error("trajectory left the chart domain at step {step}")]
    LeftDomain { step: usize },

    #[error("line {line}: {message}")]
    Chart { line: usize, message: String },
}
