use thiserror::Error;

/// Errors across the workbench. Every variant carries a stable
/// machine-readable code (see [`Error::code`]) so callers and the CLI can
/// react without parsing messages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no topological order")]
    Cyclic,
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("unknown edge id `{0}`")]
    UnknownEdge(String),
    #[error("sink is contained in the source set")]
    SinkInSourceSet,
    #[error("width mismatch: {0}")]
    WidthMismatch(String),
    #[error("edge `{0}` alphabet is not a power of two: capacity times blocklength is not an integer")]
    NonintegralAlphabet(String),
    #[error("space limit exceeded: {0}")]
    SpaceLimit(String),
    #[error("key map is not uniform")]
    NotUniform,
    #[error("operation requires a single source, instance has {0}")]
    MultiSource(usize),
    #[error("operation requires an empty eavesdrop collection")]
    NonzeroB,
    #[error("operation requires an all-linear code")]
    NotLinear,
    #[error("key matrix rank is below the key width")]
    RankDeficient,
    #[error("operation requires exactly one message source, instance has {0}")]
    MultiMessageSource(usize),
    #[error("rate must be positive")]
    BadRate,
    #[error("key width {key_bits} exceeds the {edge_bits}-bit key edge")]
    CapacityExceeded { key_bits: u32, edge_bits: u32 },
    #[error("key is not a function of the message source's bits")]
    KeyNotSourceFunction,
    #[error("alpha must be a positive integer")]
    BadAlpha,
    #[error("instance does not have the layered gap-family shape")]
    NotGapInstance,
    #[error("two-stage forwarding code is only defined for up to three sources")]
    UnsupportedR,
    #[error("candidate space exceeds the search budget: {0}")]
    BudgetExceeded(String),
    #[error("bad coordinates: {0}")]
    BadCoords(String),
    #[error("search witness failed independent re-verification: {0}")]
    WitnessRejected(String),
    #[error("malformed input: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code for this error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Cyclic => "CYCLIC",
            Error::UnknownNode(_) => "UNKNOWN_NODE",
            Error::UnknownEdge(_) => "UNKNOWN_EDGE",
            Error::SinkInSourceSet => "SINK_IN_SOURCE_SET",
            Error::WidthMismatch(_) => "WIDTH_MISMATCH",
            Error::NonintegralAlphabet(_) => "NONINTEGRAL_ALPHABET",
            Error::SpaceLimit(_) => "SPACE_LIMIT",
            Error::NotUniform => "NOT_UNIFORM",
            Error::MultiSource(_) => "MULTI_SOURCE",
            Error::NonzeroB => "NONZERO_B",
            Error::NotLinear => "NOT_LINEAR",
            Error::RankDeficient => "RANK_DEFICIENT",
            Error::MultiMessageSource(_) => "MULTI_MESSAGE_SOURCE",
            Error::BadRate => "BAD_RATE",
            Error::CapacityExceeded { .. } => "CAPACITY_EXCEEDED",
            Error::KeyNotSourceFunction => "KEY_NOT_SOURCE_FUNCTION",
            Error::BadAlpha => "BAD_ALPHA",
            Error::NotGapInstance => "NOT_GAP_INSTANCE",
            Error::UnsupportedR => "UNSUPPORTED_R",
            Error::BudgetExceeded(_) => "BUDGET_EXCEEDED",
            Error::BadCoords(_) => "BAD_COORDS",
            Error::WitnessRejected(_) => "WITNESS_REJECTED",
            Error::BadFormat(_) => "BAD_FORMAT",
            Error::Io(_) => "IO",
            Error::Json(_) => "JSON",
        }
    }

    /// True for errors that signal a resource cap rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::SpaceLimit(_) | Error::BudgetExceeded(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
