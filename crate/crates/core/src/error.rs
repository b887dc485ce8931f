//! Error type shared by every pipeline stage.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SimError>;

/// Failure modes of the simulation pipeline.
///
/// `Parse` and `Validation` indicate a bad configuration (the CLI maps them
/// to exit code 2); everything else is a numeric or runtime failure.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error(
        "quadrature did not converge: relative change {last_change:.3e} \
         after {refinements} refinement(s)"
    )]
    QuadratureNonConvergence { last_change: f64, refinements: u32 },

    #[error("ill-conditioned system: condition number {cond:.3e} exceeds {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
