use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// [`Error::kind`] yields the stable machine-readable name used by the CLI's
/// `ERROR <Kind>: <detail>` lines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("at {line}:{column}: {message} (expected {expected})")]
    PatternParse {
        line: usize,
        column: usize,
        message: String,
        expected: String,
    },
    #[error("line {line}: variable {var} in an RDF graph")]
    NonGroundGraph { line: usize, var: String },
    #[error("line {line}: variable {var} is bound twice")]
    DuplicateBinding { line: usize, var: String },
    #[error("mappings disagree on {var}")]
    IncompatibleMappings { var: String },
    #[error("variable {var} is not bound")]
    UnboundVariable { var: String },
    #[error("{0}")]
    NotWellDesigned(String),
    #[error("distinguished sets differ: {left} vs {right}")]
    MismatchedDistinguishedSets { left: String, right: String },
    #[error("{0}")]
    DomainMismatch(String),
    #[error("graph has {vertices} vertices, exact solver cap is {cap}")]
    GraphTooLarge { vertices: usize, cap: usize },
    #[error("invalid pebble count {k}: {reason}")]
    InvalidK { k: usize, reason: String },
    #[error("node n{node} of tree {tree} adds no variable to its parent")]
    NotNRNormalForm { tree: usize, node: usize },
    #[error("{0}")]
    InstanceTooLarge(String),
    #[error("{0}")]
    SearchTooLarge(String),
    #[error("{0}")]
    InvalidMinorMap(String),
    #[error("{0}")]
    ComponentMismatch(String),
    #[error("IRI {0} uses the reserved frz: prefix")]
    ReservedPrefixCollision(String),
    #[error("{0}")]
    NoHardWitness(String),
    #[error("{0}")]
    NoGridMinorFound(String),
    #[error("{0}")]
    InvalidTree(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } | Error::PatternParse { .. } => "ParseError",
            Error::NonGroundGraph { .. } => "NonGroundGraph",
            Error::DuplicateBinding { .. } => "DuplicateBinding",
            Error::IncompatibleMappings { .. } => "IncompatibleMappings",
            Error::UnboundVariable { .. } => "UnboundVariable",
            Error::NotWellDesigned(_) => "NotWellDesigned",
            Error::MismatchedDistinguishedSets { .. } => "MismatchedDistinguishedSets",
            Error::DomainMismatch(_) => "DomainMismatch",
            Error::GraphTooLarge { .. } => "GraphTooLarge",
            Error::InvalidK { .. } => "InvalidK",
            Error::NotNRNormalForm { .. } => "NotNRNormalForm",
            Error::InstanceTooLarge(_) => "InstanceTooLarge",
            Error::SearchTooLarge(_) => "SearchTooLarge",
            Error::InvalidMinorMap(_) => "InvalidMinorMap",
            Error::ComponentMismatch(_) => "ComponentMismatch",
            Error::ReservedPrefixCollision(_) => "ReservedPrefixCollision",
            Error::NoHardWitness(_) => "NoHardWitness",
            Error::NoGridMinorFound(_) => "NoGridMinorFound",
            Error::InvalidTree(_) => "InvalidTree",
        }
    }
}
