use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: need finite lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("grid function needs at least 2 finite nodal values, got {0}")]
    InvalidGrid(String),

    #[error("grid too coarse: need n >= {required}, got n = {n}")]
    GridTooCoarse { n: usize, required: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid coefficient bounds: need 0 < lambda < Lambda < inf, got ({lambda}, {upper})")]
    InvalidBounds { lambda: f64, upper: f64 },

    #[error("coefficient outside [λ,Λ]: value {value} at x = {x} not in [{lambda}, {upper}]")]
    NotAdmissible {
        x: f64,
        value: f64,
        lambda: f64,
        upper: f64,
    },

    #[error(
        "no zero of u′: data inconsistent with homogeneous boundary values (min |u′| = {min_abs})"
    )]
    NoZeroOfDerivative { min_abs: f64 },

    #[error("gradient vanishes everywhere")]
    GradientVanishes,

    #[error("F is constant: f vanishes identically")]
    ConstantPrimitive,

    #[error("identifiability violation detected: ‖a−b‖ = {lhs} while ‖u′_a−u′_b‖ = 0")]
    IdentifiabilityViolation { lhs: f64 },

    #[error("residual check failed: {what} = {value:e} exceeds {tol:e}")]
    ResidualTooLarge { what: String, value: f64, tol: f64 },

    #[error(
        "TV budget violated: no level in [{floor:e}, {t_start}] satisfies P(E_t) <= 1/(t|ln t|)"
    )]
    TvBudgetViolated { t_start: f64, floor: f64 },

    #[error("mesh must resolve partition: m = {m} is not a multiple of {nx} and {ny}")]
    MeshNotAligned { m: usize, nx: usize, ny: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
