use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Error, Debug)]
pub enum CcmError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("invalid completion pattern: {0}")]
    Pattern(String),

    #[error("singular system: rank {rank} < {needed}")]
    Singular { rank: usize, needed: usize },

    #[error("underdetermined: {have} conditions for {needed} unknowns")]
    Underdetermined { have: usize, needed: usize },

    #[error("not decodable: rank {rank} of {unknowns} unknowns (deficit {})", unknowns - rank)]
    NotDecodable { rank: usize, unknowns: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration of {count} patterns exceeds limit {limit}; use sampling mode")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("overhead {max_overhead} exhausted after {symbols} coded symbols with {resolved}/{unknowns} resolved")]
    OverheadExceeded {
        max_overhead: f64,
        symbols: usize,
        resolved: usize,
        unknowns: usize,
    },

    #[error("peeling stuck with {resolved}/{unknowns} unknowns resolved")]
    Stuck { resolved: usize, unknowns: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CcmError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            CcmError::Dimension(_) => "DimensionError",
            CcmError::Config(_) => "ConfigError",
            CcmError::Plan(_) => "PlanError",
            CcmError::Pattern(_) => "PatternError",
            CcmError::Singular { .. } => "SingularError",
            CcmError::Underdetermined { .. } => "UnderdeterminedError",
            CcmError::NotDecodable { .. } => "NotDecodable",
            CcmError::Domain(_) => "DomainError",
            CcmError::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            CcmError::OverheadExceeded { .. } => "OverheadExceeded",
            CcmError::Stuck { .. } => "Stuck",
            CcmError::Format(_) => "FormatError",
            CcmError::Io(_) => "IoError",
            CcmError::Json(_) => "JsonError",
            CcmError::Csv(_) => "CsvError",
        }
    }
}

pub type Result<T> = std::result::Result<T, CcmError>;
