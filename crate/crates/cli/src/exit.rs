//! Errors and exit codes: 10-19 config, 20-29 construction, 30-39 verification, 40-49 IO.

use klein_core::error::{
    DivisorError, EllipticError, GluingError, InvariantError, InvolutionError, LatticeError, MeshError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    ConfigParse(String),
    #[error("config: {0}")]
    ConfigInvalid(String),
    #[error("lattice: {0}")]
    Lattice(String),
    #[error("involution: {0}")]
    Involution(#[from] InvolutionError),
    #[error("construction: {0}")]
    Divisor(#[from] DivisorError),
    #[error("verification failed: {0} check(s) out of tolerance")]
    ChecksFailed(usize),
    #[error("invariants: {0}")]
    Invariant(#[from] InvariantError),
    #[error("gluing: {0}")]
    Gluing(#[from] GluingError),
    #[error("io: {0}")]
    Io(String),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Lattice(e.to_string())
    }
}

impl From<EllipticError> for CliError {
    fn from(e: EllipticError) -> Self {
        CliError::Lattice(e.to_string())
    }
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) => 10,
            CliError::ConfigInvalid(_) => 11,
            CliError::Lattice(_) => 20,
            CliError::Involution(_) => 21,
            CliError::Divisor(_) => 22,
            CliError::ChecksFailed(_) => 30,
            CliError::Invariant(_) => 31,
            CliError::Gluing(_) => 32,
            CliError::Io(_) => 40,
            CliError::Mesh(MeshError::Io(_)) => 40,
            CliError::Mesh(_) => 41,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.code() {
            10..=19 => "config",
            20..=29 => "construction",
            30..=39 => "verification",
            _ => "io",
        }
    }
}
