use alloc::string::String;
use alloc::vec::Vec;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{n} qubits exceeds the limit of {max} for this operation")]
    TooManyQubits { n: usize, max: usize },
    #[error("invalid Pauli label character {0:?}")]
    InvalidLabel(char),
    #[error("Pauli operators anticommute; the product is not Hermitian")]
    Anticommuting,
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("not a Clifford operation: {0}")]
    NotClifford(&'static str),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("map is not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("Pauli probabilities are not a distribution: {0}")]
    InvalidDistribution(String),
    #[error("frame operator is singular on labels {0:?}")]
    SingularFrame(Vec<String>),
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("malformed encoding: {0}")]
    Malformed(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
