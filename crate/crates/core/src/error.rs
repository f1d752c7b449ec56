use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("degenerate frame: {0}")]
    Degenerate(String),

    #[error("series diverges: partial coefficient energy {partial:e} exceeds cap {cap:e}")]
    Divergent { partial: f64, cap: f64 },

    #[error("discrepancy equation not solvable: tau*sqrt(B_v)*delta = {lhs:e} >= rho*sqrt(A_v)*|P y| = {rhs:e}")]
    NotSolvable { lhs: f64, rhs: f64 },

    #[error("no bracket for the discrepancy root in [{lo:e}, {hi:e}]")]
    BracketNotFound { lo: f64, hi: f64 },

    #[error("frequency {omega} exceeds the grid Nyquist frequency {nyquist}")]
    Unresolved { omega: f64, nyquist: f64 },

    #[error("malformed container: {0}")]
    Format(String),

    #[error("assumption check failed: {0}")]
    Assumption(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
