use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0:?} is not interior to the domain")]
    PointNotInDomain(Vec<f64>),

    #[error("curve leaves the domain at segment {segment}")]
    CurveNotInDomain { segment: usize },

    #[error("sampling produced no points (clearance excludes the whole domain)")]
    EmptySample,

    #[error("unbounded domain needs an explicit sampling window")]
    SamplingWindowRequired,

    #[error("no path between the query points at this resolution; refine the graph")]
    GraphDisconnected,

    #[error("neargeodesic verification failed: pair ({i}, {j}) has ratio {ratio:.6} > {nu}")]
    VerificationFailed {
        i: usize,
        j: usize,
        ratio: f64,
        nu: f64,
    },

    #[error("endpoints coincide; turning ratio undefined")]
    DegeneratePair,

    #[error("degenerate triple at index {0}")]
    DegenerateTriple(usize),

    #[error("triple {0} is not a triple in the pair (X, A)")]
    TripleNotInPair(usize),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid constant: {0}")]
    InvalidConstant(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inverse queried outside the represented range: {0}")]
    InversionOutOfRange(f64),

    #[error("point {0:?} violates the branch sector of the power map")]
    BranchViolation(Vec<f64>),

    #[error("map validation failed: {0}")]
    MapValidation(String),

    #[error("image domain could not be constructed: {0}")]
    ImageDomainInvalid(String),

    #[error("config invalid: {0}")]
    ConfigInvalid(String),

    #[error("cache format error: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for validation problems, 3 for
    /// runtime failures of an otherwise valid experiment.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GraphDisconnected
            | Error::VerificationFailed { .. }
            | Error::EmptySample
            | Error::Io(_)
            | Error::Csv(_)
            | Error::CacheFormat(_) => 3,
            _ => 2,
        }
    }
}
