use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("band {band} outside representable range [-{limit}, {limit}]")]
    BandOutOfRange { band: i64, limit: i64 },

    #[error("invalid symbol specification `{spec}`: {reason}")]
    SymbolSpec { spec: String, reason: String },

    #[error("symbol evaluation failed: {0}")]
    SymbolEval(String),

    #[error("dense oracle limited to n_points <= {limit}, got {n}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("strategy `{strategy}` not valid for this symbol: {reason}")]
    InvalidStrategy { strategy: &'static str, reason: String },

    #[error("spectral tail fraction {fraction:.3e} exceeds tolerance {tolerance:.3e}")]
    AliasingTail { fraction: f64, tolerance: f64 },

    #[error("(H2) violation: source symbol {magnitude:.3e} at exact resonance {quadruple:?}")]
    H2Violation { quadruple: [f64; 4], magnitude: f64 },

    #[error("quartic symbol is not Hermitian (relative defect {defect:.3e})")]
    NonHermitian { defect: f64 },

    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("envelope admissibility constant {constant:.4} exceeds {limit}")]
    EnvelopeNotAdmissible { constant: f64, limit: f64 },

    #[error("envelope does not dominate data at band {band}")]
    EnvelopeDomination { band: i64 },

    #[error("under-resolved profile: lambda*dx = {value:.3} > {limit}")]
    UnderResolved { value: f64, limit: f64 },

    #[error("experiment precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
