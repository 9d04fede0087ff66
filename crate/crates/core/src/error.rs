use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("NotExpansive: smallest eigenvalue modulus {min_modulus} is not above 1")]
    NotExpansive { min_modulus: f64 },

    #[error("SingularMatrix: |det A| = {det} is below 1e-12")]
    SingularMatrix { det: f64 },

    #[error("ConstructionFailed: {0}")]
    ConstructionFailed(String),

    #[error("EmptyRegime: no samples with {0}")]
    EmptyRegime(&'static str),

    #[error("BracketFailure: modular never drops below 1 within 2^±120 scaling")]
    BracketFailure,

    #[error("AliasingRisk: |xi| = {norm} exceeds the guard {guard}")]
    AliasingRisk { norm: f64, guard: f64 },

    #[error("SupportOverflow: {0}")]
    SupportOverflow(String),

    #[error("DegenerateSeed: projection kept {kept:.3e} of the seed's L2 mass")]
    DegenerateSeed { kept: f64 },

    #[error("GramIllConditioned: monomial Gram condition {condition:.3e} exceeds 1e12")]
    GramIllConditioned { condition: f64 },

    #[error("GridMismatch: {0}")]
    GridMismatch(String),

    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),

    #[error("Config: {0}")]
    Config(String),

    #[error("Io: {0}")]
    Io(#[from] std::io::Error),

    #[error("Json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("Csv: {0}")]
    Csv(#[from] csv::Error),
}
