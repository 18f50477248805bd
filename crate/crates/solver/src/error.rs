use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid solve request: {0}")]
    InvalidRequest(String),
    #[error("problem carries integer variables; use solve_milp or allow relaxation")]
    IntegerVariables,
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("LP file error at line {line}: {message}")]
    LpParse { line: usize, message: String },
    #[error("cannot write constraint `{0}` with no terms")]
    EmptyConstraint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
