use thiserror::Error;

/// Violation found by [`crate::measurement::validate_joint_povm`].
#[derive(Clone, Debug, PartialEq)]
pub struct PovmViolation {
    /// Grid position `(a, b)` of the offending element, or `None` for
    /// grid-level violations such as a completeness defect.
    pub element: Option<(usize, usize)>,
    pub kind: ViolationKind,
    /// How far the check missed its tolerance (always nonnegative).
    pub magnitude: f64,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NotHermitian,
    NegativeEigenvalue,
    CompletenessDefect,
    ShapeMismatch,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ViolationKind::NotHermitian => "not Hermitian",
            ViolationKind::NegativeEigenvalue => "negative eigenvalue",
            ViolationKind::CompletenessDefect => "completeness defect",
            ViolationKind::ShapeMismatch => "shape mismatch",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum EdrError {
    #[error("dimension {dim} outside supported range [{min}, {max}]")]
    DimensionOutOfRange { dim: usize, min: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix deviates from Hermitian by {deviation:.3e} (tolerance {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("operator has eigenvalue {min_eigenvalue:.3e} below -{tolerance:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64, tolerance: f64 },

    #[error("matrix deviates from unitary by {deviation:.3e} (tolerance {tolerance:.3e})")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("vectors deviate from orthonormal by {deviation:.3e} (tolerance {tolerance:.3e})")]
    NotOrthonormal { deviation: f64, tolerance: f64 },

    #[error("eigensolver failed to converge for dimension {dim}")]
    EigenConvergence { dim: usize },

    #[error("trace product has imaginary part {imaginary:.3e} (tolerance {tolerance:.3e})")]
    ImaginaryTrace { imaginary: f64, tolerance: f64 },

    #[error("joint POVM failed validation ({} violation(s); first: {first})", .violations.len())]
    InvalidPovm {
        first: String,
        violations: Vec<PovmViolation>,
    },

    #[error("elements do not sum to the identity (deviation {deviation:.3e}, tolerance {tolerance:.3e})")]
    CompletenessDefect { deviation: f64, tolerance: f64 },

    #[error("{name} = {value} outside [{min}, {max}]")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("outcome index {index} out of range for {count} outcomes")]
    OutcomeOutOfRange { index: usize, count: usize },

    #[error("not a permutation of 0..{len}")]
    InvalidPermutation { len: usize },

    #[error("probability {value:.3e} below the negativity floor")]
    NegativeProbability { value: f64 },

    #[error("observable eigenvalues are not distinct (minimum gap {gap:.3e})")]
    DegenerateEigenvalues { gap: f64 },

    #[error("basis pair is not Fourier-related (overlap deviation {deviation:.3e})")]
    NotFourierRelated { deviation: f64 },

    #[error("basis pair is not in the canonical qubit frame (deviation {deviation:.3e})")]
    NotCanonicalFrame { deviation: f64 },

    #[error("{context}: {reason}")]
    Invalid { context: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, EdrError>;
