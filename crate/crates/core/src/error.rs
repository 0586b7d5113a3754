use thiserror::Error;

pub type Result<T, E = HgtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HgtError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("log density is NaN at the current point {0}")]
    NanLogDensity(f64),

    #[error(
        "slice sampler exhausted {max_shrink} shrinkage steps \
         (current {current}, bracket [{lower}, {upper}], slice level {level})"
    )]
    SliceExhausted {
        current: f64,
        lower: f64,
        upper: f64,
        level: f64,
        max_shrink: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("design matrix is rank deficient; dependent columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error(
        "{block} precision is not positive definite \
         (smallest eigenvalue {min_eigenvalue:e}, largest {max_eigenvalue:e})"
    )]
    NotPositiveDefinite {
        block: &'static str,
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("observation {index}: {source}")]
    Observation {
        index: usize,
        #[source]
        source: Box<HgtError>,
    },

    #[error("updating {parameter}: {source}")]
    Parameter {
        parameter: String,
        #[source]
        source: Box<HgtError>,
    },

    #[error("preferred model failed at iteration {iteration}: {source}")]
    PreferredModel {
        iteration: usize,
        #[source]
        source: Box<HgtError>,
    },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<HgtError>,
    },

    #[error("chain holds no draws")]
    EmptyChain,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cells are misaligned; unmatched cell ids: {0:?}")]
    Misaligned(Vec<usize>),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<HgtError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HgtError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        HgtError::Domain(msg.into())
    }

    pub(crate) fn at_observation(self, index: usize) -> Self {
        HgtError::Observation {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn for_parameter(self, parameter: impl Into<String>) -> Self {
        HgtError::Parameter {
            parameter: parameter.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        HgtError::Iteration {
            iteration,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        HgtError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
