use std::fmt;

/// Errors raised by grids, propagators, schemes and studies.
#[derive(Debug, thiserror::Error)]
pub enum SplitError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A propagator would amplify beyond its overflow guard, e.g. a backward
    /// step of a parabolic flow.
    #[error("unstable step: {0}")]
    Unstable(String),

    /// Fixed-point increments grew over two consecutive iterations.
    #[error("fixed-point iteration diverged: increments {increments:?}")]
    Divergence { increments: Vec<f64> },

    /// The inner integrator of a partial flow gave up.
    #[error("partial flow failed: {0}")]
    FlowFailure(String),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least {needed} usable rows for an order fit, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("reference self-check failed: runs differ by {difference:e} (allowed {allowed:e})")]
    ReferenceMismatch { difference: f64, allowed: f64 },

    #[error("step {index}: {source}")]
    AtStep {
        index: usize,
        #[source]
        source: Box<SplitError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

/// Coarse failure category, used for exit codes and the C ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    NonFinite,
    Unstable,
    Divergence,
    FlowFailure,
    Reference,
    Io,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Config => "CONFIG",
            ErrorKind::NonFinite => "NON_FINITE",
            ErrorKind::Unstable => "UNSTABLE",
            ErrorKind::Divergence => "DIVERGENCE",
            ErrorKind::FlowFailure => "FLOW_FAILURE",
            ErrorKind::Reference => "REFERENCE",
            ErrorKind::Io => "IO",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl SplitError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            SplitError::InvalidGrid(_)
            | SplitError::ShapeMismatch(_)
            | SplitError::InvalidScheme(_)
            | SplitError::InvalidConfig(_)
            | SplitError::TooFewRows { .. }
            | SplitError::Parse(_) => ErrorKind::Config,
            SplitError::NonFinite(_) => ErrorKind::NonFinite,
            SplitError::Unstable(_) => ErrorKind::Unstable,
            SplitError::Divergence { .. } => ErrorKind::Divergence,
            SplitError::FlowFailure(_) => ErrorKind::FlowFailure,
            SplitError::ReferenceMismatch { .. } => ErrorKind::Reference,
            SplitError::Io(_) => ErrorKind::Io,
            SplitError::AtStep { source, .. } => source.kind(),
        }
    }

    pub(crate) fn at_step(self, index: usize) -> Self {
        match self {
            e @ SplitError::AtStep { .. } => e,
            e => SplitError::AtStep {
                index,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, SplitError>;
