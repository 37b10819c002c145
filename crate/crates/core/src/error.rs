use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated its domain invariant. Carries the field name.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Malformed or out-of-domain configuration input.
    #[error("configuration error: {0}")]
    Config(String),

    /// The drift matrix has an eigenvalue with non-negative real part;
    /// the stationary covariance does not exist.
    #[error("unstable operating point (spectral abscissa {spectral_abscissa:e} rad/s)")]
    Unstable { spectral_abscissa: f64 },

    /// The eigenvalue solver did not converge. Reported distinctly so it
    /// is never mistaken for a physical instability.
    #[error("eigenvalue solver failed to converge on the drift matrix")]
    EigenSolver,

    /// The linear system for the covariance is singular (marginal stability).
    #[error("singular Lyapunov system (marginally stable drift matrix)")]
    SingularSystem,

    /// The elimination solver needs G != 0 and Delta != 0.
    #[error("elimination solver requires G != 0 and Delta != 0; use the direct solver")]
    EliminationDegenerate,

    /// The single-unknown pivot property failed to hold at some iteration.
    #[error("elimination stalled with {remaining} off-diagonal unknowns left")]
    EliminationStalled { remaining: usize },

    /// Fixed-point iteration for the effective frequency did not converge.
    #[error("effective-frequency iteration did not converge (last iterate {last:e} rad/s)")]
    NonConvergence { last: f64 },

    /// Quadrature failed its horizon-doubling invariance check.
    #[error("covariance quadrature did not converge under horizon doubling (residual change {change:e})")]
    QuadratureNotConverged { change: f64 },

    /// A covariance matrix failed the physicality precondition.
    #[error("unphysical covariance matrix: {0}")]
    UnphysicalCovariance(String),

    /// Degenerate input to the low-temperature fit.
    #[error("low-temperature fit needs at least 3 points with distinct occupancies")]
    DegenerateFit,

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
