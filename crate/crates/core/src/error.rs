//! Error type shared by all modules.

pub type Result<T> = std::result::Result<T, QfpError>;

/// Everything that can go wrong when assembling a model or running an
/// operation on it. Variants are grouped by cause: model validation,
/// equilibrium existence, and numerical guards.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QfpError {
    /// The diffusion constants do not describe a quantum dynamical semigroup.
    #[error("Lindblad condition violated: Dpp*Dqq - Dpq^2 = {lhs:e} < {rhs:e} = (hbar*gamma/2)^2")]
    LindbladViolation { lhs: f64, rhs: f64 },

    #[error("parameter `{name}` = {value} is outside its admissible range")]
    NegativeParameter { name: &'static str, value: f64 },

    #[error("diffusion matrix is degenerate: smallest eigenvalue {delta:e} <= 0")]
    DegenerateDiffusion { delta: f64 },

    /// Steady states require both friction and confinement.
    #[error("no steady state exists for gamma = {gamma}, omega0 = {omega0} (both must be > 0)")]
    NoEquilibrium { gamma: f64, omega0: f64 },

    /// The opposite guard: an unconfined-only operation was called with
    /// confined parameters.
    #[error("parameters are confined (gamma > 0 and omega0 > 0); an equilibrium state exists")]
    HasEquilibrium,

    #[error("dispersion rates are defined only when gamma = 0 or omega0 = 0")]
    ConfinedCase,

    #[error("kernel evaluation needs t > {min:e}; got t = {t}")]
    SingularTime { t: f64, min: f64 },

    /// Too much mass sits in the outermost grid band for the result to be
    /// trusted.
    #[error("boundary band holds {fraction:e} of the total mass (limit {limit:e}); enlarge the grid")]
    SupportOverflow { fraction: f64, limit: f64 },

    #[error("fields live on different phase-space grids")]
    GridMismatch,

    #[error("grid rejected: {reason}")]
    InvalidGrid { reason: &'static str },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StabilityViolation { dt: f64, bound: f64 },

    /// A logarithmic entropy generator was fed a field with negative values.
    #[error("generator domain violated: field minimum {min:e} is negative")]
    DomainViolation { min: f64 },

    #[error("masses differ: {m_f} vs {m_g} (tolerance {tol:e})")]
    MassMismatch { m_f: f64, m_g: f64, tol: f64 },

    #[error("relative entropy diverges: excluded tail mass {excluded:e} exceeds {limit:e}")]
    InfiniteEntropy { excluded: f64, limit: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl QfpError {
    /// Coarse classification used by the CLI to pick exit codes.
    pub fn is_model_error(&self) -> bool {
        matches!(
            self,
            QfpError::LindbladViolation { .. }
                | QfpError::NegativeParameter { .. }
                | QfpError::DegenerateDiffusion { .. }
                | QfpError::NoEquilibrium { .. }
                | QfpError::HasEquilibrium
                | QfpError::ConfinedCase
        )
    }
}
