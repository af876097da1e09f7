use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("maximum number of iterations ({0}) reached")]
    MaxIterations(usize),
    #[error("program is primal infeasible")]
    Infeasible,
    #[error("program is unbounded")]
    Unbounded,
}
