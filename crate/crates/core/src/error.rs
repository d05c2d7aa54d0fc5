use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum SymtopError {
    #[error("{field} = {value} is out of range for (j, k, m) = ({j}, {k}, {m})")]
    IndexRange {
        field: &'static str,
        value: i64,
        j: i64,
        k: i64,
        m: i64,
    },

    #[error("negative radicand in coefficient {name} at (j, k, m) = ({j}, {k}, {m})")]
    CoefficientDomain {
        name: &'static str,
        j: i64,
        k: i64,
        m: i64,
    },

    #[error("theta undefined: in-plane dipole (delta_1, delta_2) is zero")]
    ThetaUndefined,

    #[error("dipole is zero")]
    ZeroDipole,

    #[error("exact classification requires irrational-ratio mode (resonance_exact = true)")]
    ExactModeRequired,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("generator {index} is not skew-Hermitian (defect {defect:.3e})")]
    NotSkewHermitian { index: usize, defect: f64 },

    #[error("incomplete closure: basis capped at {reached} of {cap} after {iterations} iterations")]
    ClosureBudget {
        reached: usize,
        cap: usize,
        iterations: usize,
    },

    #[error("mode seed does not lie in the ambient span (residual {residual:.3e})")]
    IdealSeedOutsideSpan { residual: f64 },

    #[error("oracle supports j <= {max}, got {got}")]
    OracleScale { max: u32, got: u32 },

    #[error("no k-degeneracy to break (k = 0)")]
    NoKDegeneracy,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SymtopError>;
