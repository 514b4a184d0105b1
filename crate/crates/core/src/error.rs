use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(&'static str),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("kernel {family} does not support this operation: {reason}")]
    UnsupportedKernel { family: &'static str, reason: &'static str },

    #[error("kernel is not steep on the window [{lo}, {hi}]")]
    NotSteep { lo: f64, hi: f64 },

    #[error("internal inconsistency: {what} = {value} (expected non-negative)")]
    NegativeResidue { what: &'static str, value: f64 },

    #[error("exact rectangle discrepancy needs {work:.3e} units of work (budget {budget:.3e}); use sampled mode")]
    OverBudget { work: f64, budget: f64 },

    #[error("herding certificate violated at step {t}")]
    CertificateViolated { t: usize },

    #[error("lemma hypothesis violated: {0}")]
    Hypothesis(&'static str),
}
