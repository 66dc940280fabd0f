use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,
    #[error("endpoint not in sample")]
    EndpointNotInSample,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty schedule")]
    EmptySchedule,
    #[error("phase not anchored (phase {phase})")]
    NotAnchored { phase: usize },
    #[error("not an X-walk: {0}")]
    NotXWalk(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("sample too sparse for gap {gap} at phase {phase}")]
    SampleTooSparse { gap: f64, phase: usize },
    #[error("requires dimension ≥ 2")]
    DimensionTooSmall,
    #[error("component {component} does not reach radius {radius}")]
    ComponentTooShort { component: usize, radius: f64 },
    #[error("dimension budget exceeded (k = {0}, max 5)")]
    DimensionBudget(usize),
    #[error("RP certification failed: no balanced permutation for a {} term instance (indices {:?})", .0.indices.len(), .0.indices)]
    RpCertificationFailed(Box<Counterexample>),
    #[error("prefix too short")]
    PrefixTooShort,
    #[error("RP bound violated at stage {stage}")]
    RpBoundViolated { stage: usize },
    #[error("extension postcondition ({condition}) failed at stage {stage}")]
    ExtensionFailed { stage: usize, condition: u8 },
    #[error("stage {segment}: target not chainable at eta {eta}")]
    NotChainable { segment: usize, eta: f64 },
    #[error("window shorter than 2 points")]
    WindowTooShort,
    #[error("precondition violated at index {0}")]
    PreconditionViolated(usize),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A batch of series terms that admits no balanced ordering.
#[derive(Debug, Clone)]
pub struct Counterexample {
    /// 1-based indices into the certified series prefix.
    pub indices: Vec<usize>,
    pub sum_norm: f64,
    pub bound: f64,
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn at_stage(self, stage: usize) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
