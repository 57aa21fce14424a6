use thiserror::Error;

/// Every failure the simulator can report.
///
/// The variants map onto the CLI exit codes: configuration problems exit with
/// 2, regime refusals with 3, numerical convergence failures with 4 and
/// everything else with 1.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The optical layout is outside the regime an operation assumes.
    #[error("regime error: {0}")]
    Regime(String),

    /// Every branch of a conditional ensemble was annihilated.
    #[error("empty ensemble: every conditioning branch has zero probability")]
    EmptyEnsemble,

    /// Bob's measurement time precedes Alice's choice.
    #[error("causal-order error: t_b ({t_b}) precedes t_a ({t_a})")]
    CausalOrder { t_a: f64, t_b: f64 },

    /// A pattern has no defined visibility (flat zero, or too short a span).
    #[error("undefined visibility: {0}")]
    UndefinedVisibility(String),

    /// An adaptive quadrature ran out of refinements.
    #[error("convergence error: {0}")]
    Convergence(String),

    /// A configuration file could not be accepted.
    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    /// The oracle's work estimate exceeds its configured cap.
    #[error("memory guard: {0}")]
    MemoryGuard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }

    pub(crate) fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Regime(_) => 3,
            Error::Convergence(_) => 4,
            _ => 1,
        }
    }

    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Regime(_) => "regime",
            Error::EmptyEnsemble => "empty_ensemble",
            Error::CausalOrder { .. } => "causal_order",
            Error::UndefinedVisibility(_) => "undefined_visibility",
            Error::Convergence(_) => "convergence",
            Error::Config { .. } => "config",
            Error::MemoryGuard(_) => "memory_guard",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
