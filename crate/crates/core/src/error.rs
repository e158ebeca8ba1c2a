use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("covering does not contain point ({x}, {y})")]
    Coverage { x: f64, y: f64 },

    #[error("patch {patch} holds {count} nodes, at least {required} are required")]
    NodeStarved {
        patch: usize,
        count: usize,
        required: usize,
    },

    #[error("local system of patch {patch} is numerically singular (1-norm condition estimate {cond:e})")]
    IllConditioned { patch: usize, cond: f64 },

    #[error("matrix is singular at pivot step {step}")]
    Singular { step: usize },

    #[error("node set is not unisolvent for polynomials of degree < {order}")]
    NotUnisolvent { order: usize },

    #[error("matrix dimension {n} exceeds the limit of {limit}")]
    SizeGuard { n: usize, limit: usize },

    #[error("eigenvalue iteration did not converge; {found} of {n} eigenvalues found")]
    NoConvergence { found: usize, n: usize },

    #[error("solution blew up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("amplification factor is singular (1 - theta dt lambda = 0)")]
    SingularAmplification,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("every sweep entry failed")]
    SweepFailed,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the user's configuration rather than by numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::Coverage { .. }
                | Error::NodeStarved { .. }
                | Error::NotUnisolvent { .. }
                | Error::SizeGuard { .. }
                | Error::Parse(_)
        )
    }
}

impl Error {
    /// Short status tag used in sweep tables.
    pub fn marker(&self) -> &'static str {
        match self {
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::Singular { .. } => "singular",
            Error::BlowUp { .. } => "blow_up",
            Error::NoConvergence { .. } => "no_convergence",
            Error::SingularAmplification => "singular_amplification",
            Error::Io(_) | Error::Csv(_) => "io",
            e if e.is_config() => "config",
            _ => "numerical",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
