use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree sequence is empty")]
    EmptySequence,

    #[error("could not parse degree sequence: {0}")]
    Parse(String),

    #[error("degree sum is odd ({0}); half-edges cannot be perfectly matched")]
    OddDegreeSum(u64),

    #[error("degree sequence is not graphical")]
    NotGraphical,

    #[error("moment overflow: {0}")]
    Overflow(&'static str),

    #[error("{what} needs at least {min} half-edges, got {got}")]
    TooFewHalfEdges { what: &'static str, min: u64, got: u64 },

    #[error("configuration is already simple")]
    AlreadySimple,

    #[error("no admissible partner edge for the switching")]
    EmptyPartnerPool,

    #[error("instance size {0} exceeds the cap of {1}")]
    ScaleCap(u64, u64),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("path family violates {0}")]
    PathFamily(crate::switching::FamilyViolation),

    #[error("red paths require a silver run")]
    NotSilver,

    #[error("switching chain has a closed class with no simple graph")]
    NoAbsorbingState,

    #[error("rejection sampler gave up after {attempts} attempts (simple rate {rate:.4})")]
    RejectionExhausted { attempts: u64, rate: f64 },

    #[error("vertex count mismatch: {0} vs {1}")]
    VertexCountMismatch(usize, usize),

    #[error("unknown sequence family '{0}'")]
    UnknownFamily(String),

    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),

    #[error("invalid experiment parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
