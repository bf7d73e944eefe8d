use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("eigensolver did not converge (off-diagonal residual {residual:e})")]
    EigenNoConvergence { residual: f64 },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("solver did not reach gap {target:e} (gap {gap:e}, feasible value {lower:.12}, certified bound {certified:.12})")]
    Convergence {
        gap: f64,
        target: f64,
        lower: f64,
        certified: f64,
    },
    #[error("cutting-plane stall after {rounds} rounds (violation {violation:e}, certified bound {certified:.12})")]
    Stall {
        rounds: usize,
        violation: f64,
        certified: f64,
    },
    #[error("linear program is {0}")]
    Lp(&'static str),
    #[error("polytope structure: {0}")]
    Structure(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
