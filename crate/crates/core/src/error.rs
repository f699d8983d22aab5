use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("wavevector ({k:.6e}, {l:.6e}) is not commensurate with the periodic mesh")]
    Incommensurate { k: f64, l: f64 },

    #[error("consistent mass symbol vanishes at ({k:.6e}, {l:.6e})")]
    SingularMass { k: f64, l: f64 },

    #[error("{what} did not converge (residual {residual:.3e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("branch classification failed: {0}")]
    Classification(String),

    #[error("non-finite state at step {step}, subcycle {subcycle}")]
    NonFinite { step: usize, subcycle: usize },

    #[error("CFL violation: edge Courant number {courant:.3} exceeds 1")]
    Cfl { courant: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
