use thiserror::Error;

/// Errors raised by the algebra backends, the Dirichlet structure and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("backend mismatch: {0}")]
    BackendMismatch(String),

    #[error("invalid algebra descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("element is not self-adjoint (defect {defect:.3e} exceeds tolerance {tolerance:.3e})")]
    NotSelfAdjoint { defect: f64, tolerance: f64 },

    #[error("element is not positive (smallest eigenvalue {witness:.3e} below -{tolerance:.3e})")]
    NotPositive { witness: f64, tolerance: f64 },

    #[error("representation window overflow: product leaks {leaked:.3e} of L2 mass outside |n|,|m| <= {radius}")]
    WindowOverflow { leaked: f64, radius: usize },

    #[error("no exact representation: {0}")]
    NotRepresentable(String),

    #[error("negative time t = {0}")]
    NegativeTime(f64),

    #[error("degenerate Dirichlet space: every eigenvalue is below the gap tolerance")]
    DegenerateSpace,

    #[error("right-hand side has a kernel component of L2 mass {mass:.3e} (tolerance {tolerance:.3e})")]
    NoSolution { mass: f64, tolerance: f64 },

    #[error("nonlinear map failed its hypothesis probe: {0}")]
    ProbeFailure(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("singular step matrix at t = {time} (conditioning estimate {rcond:.3e})")]
    SingularStep { time: f64, rcond: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
