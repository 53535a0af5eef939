use thiserror::Error;

use crate::symmetry::DeterminingReport;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A computation produced a non-finite value.
    #[error("numeric domain error in {op}: {what}")]
    NumericDomain { op: &'static str, what: String },

    /// An input lies outside the domain of the operation.
    #[error("domain violation: {0}")]
    Domain(String),

    /// The field does not expose the derivatives the operation needs.
    #[error("capability error: {0}")]
    Capability(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A type invariant (sigma floor, positivity, ...) does not hold.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("ODE solution became non-finite at t = {t}; last good node {node}")]
    OdeBlowUp { t: f64, node: usize },

    #[error("singular control: {0}")]
    SingularControl(String),

    #[error("degenerate Lagrangian: {0}")]
    DegenerateLagrangian(String),

    /// The value-function ansatz left its validity region.
    #[error("reduction failure: {0}")]
    ReductionFailure(String),

    /// The symmetry ansatz basis cannot absorb the residual.
    #[error("ansatz mismatch: {0}")]
    AnsatzMismatch(String),

    /// Basis collection produced a rank-deficient system.
    #[error("basis error: {0}")]
    Basis(String),

    /// A constructed symmetry failed its residual certification.
    #[error(
        "symmetry certification failed: max |residual| = {max:.3e} exceeds {tol:.1e}"
    )]
    Certification {
        max: f64,
        tol: f64,
        report: Box<DeterminingReport>,
    },

    /// Objects from different parameter sets were combined.
    #[error("provenance mismatch: {0}")]
    Provenance(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("simulation failure at path {path}, step {step}: {what}")]
    Simulation {
        path: usize,
        step: usize,
        what: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
