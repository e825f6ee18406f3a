use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Physics,
    Backend,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M^dag| = {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not unitary: max |M^dag M - I| = {defect:e}")]
    NotUnitary { defect: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dimension {dim} exceeds the cap of {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("line {line} out of range for width {width}")]
    LineOutOfRange { line: usize, width: usize },
    #[error("line {0} used twice")]
    DuplicateLine(usize),
    #[error("two-qubit gate on non-adjacent lines {0} and {1}; route it through SWAPs first")]
    NonAdjacent(usize, usize),
    #[error("gap closes at k = ({}, {}): gap {gap:e}", k[0], k[1])]
    GapClosure { k: [f64; 2], gap: f64 },
    #[error("degenerate ground state at {parameter} = {value}: gap {gap:e}")]
    Degenerate { parameter: String, value: f64, gap: f64 },
    #[error("overlap {modulus:e} between states {index} and {next} is too small; refine the discretization", next = index + 1)]
    RefinementNeeded { index: usize, modulus: f64 },
    #[error("mirror symmetry violated at kx = {kx}: energy mismatch {mismatch:e}")]
    SymmetryViolation { kx: f64, mismatch: f64 },
    #[error("centre jump {jump:.3} rad at index {index} exceeds the guard; use more ky points")]
    Undersampled { index: usize, jump: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("backend failure: {0}")]
    Backend(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::GapClosure { .. } | Error::Degenerate { .. } => ErrorClass::Physics,
            Error::Backend(_) | Error::RefinementNeeded { .. } | Error::Undersampled { .. } => {
                ErrorClass::Backend
            }
            _ => ErrorClass::Config,
        }
    }
}
