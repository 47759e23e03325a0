use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("element does not conform to algebra: expected blocks {expected:?}, found {found:?}")]
    NonConforming {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),

    /// A candidate subspace failed one of the *-subalgebra axioms.
    #[error("subalgebra: {axiom} failed (defect {defect:.3e})")]
    SubalgebraAxiom { axiom: &'static str, defect: f64 },

    /// A candidate map failed one of the conditional expectation axioms.
    #[error("expectation: {axiom} defect = {defect:.3e}")]
    ExpectationAxiom { axiom: &'static str, defect: f64 },

    #[error("expectation is not faithful (Gram margin {margin:.3e})")]
    NotFaithful { margin: f64 },

    /// No quasi-basis exists at the configured tolerance.
    #[error("index is infinite at this tolerance (residual {residual:.3e})")]
    InfiniteIndex { residual: f64 },

    #[error("quasi-basis inconsistent: left defect {left:.3e}, right defect {right:.3e}")]
    QuasiBasisInconsistent { left: f64, right: f64 },

    #[error("index element: {axiom} defect = {defect:.3e}")]
    IndexAxiom { axiom: &'static str, defect: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("group: {0}")]
    GroupAxiom(String),

    #[error("action: {axiom} defect = {defect:.3e}")]
    ActionAxiom { axiom: &'static str, defect: f64 },

    #[error("embedding: {axiom} defect = {defect:.3e}")]
    EmbeddingAxiom { axiom: &'static str, defect: f64 },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    /// The spanning relations used to define a linear map are inconsistent.
    #[error("map is not well defined on its spanning set (residual {residual:.3e})")]
    WellDefinedness { residual: f64 },

    #[error("verification of {check} failed (defect {defect:.3e})")]
    Verification { check: String, defect: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
