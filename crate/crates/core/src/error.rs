use thiserror::Error;

/// Errors raised by the library operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no CA atoms found for chain '{0}'")]
    EmptyChain(String),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("structure '{0}' has no knot annotation")]
    AnnotationRequired(String),

    #[error("not enough input: {0}")]
    EmptyInput(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point cloud too large for brute force ({0} points, max {1})")]
    TooLarge(usize, usize),

    #[error("pair ({birth}, {death}) is not in the diagram")]
    UnknownPair { birth: f64, death: f64 },

    #[error("duplicate id '{0}'")]
    IdCollision(String),

    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error("neighbourhood graph is disconnected into {} components: {}", .0.len(), format_components(.0))]
    Disconnected(Vec<Vec<String>>),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("silhouette undefined: {0}")]
    UndefinedSilhouette(String),

    #[error("similarity matrix not normalised: {0}")]
    Normalization(String),

    #[error("landscape has no layer {0}")]
    NoSuchLayer(usize),
}

fn format_components(components: &[Vec<String>]) -> String {
    components
        .iter()
        .map(|c| format!("[{}]", c.join(", ")))
        .collect::<Vec<_>>()
        .join(" ")
}

pub type Result<T> = std::result::Result<T, Error>;
