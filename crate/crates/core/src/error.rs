use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown asset class `{0}`")]
    UnknownClass(String),

    #[error("frequency must lie in (0, 1], got {0}")]
    InvalidFrequency(f64),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid linear program: {0}")]
    InvalidLp(String),

    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),

    #[error("uncertainty polytope is empty")]
    EmptyPolytope,

    #[error("uncertainty polytope is unbounded in the disruption direction")]
    UnboundedPolytope,

    #[error("box bounds are infeasible: lower mass {lower} > 1 or upper mass {upper} < 1")]
    InfeasibleBox { lower: f64, upper: f64 },

    #[error("invalid attack: {0}")]
    InvalidAttack(String),

    #[error("validator size {size} (assets x stages) exceeds cap {cap}; use solve_follower instead")]
    ValidatorCapExceeded { size: usize, cap: usize },

    #[error("enumeration would evaluate {count} attacks, above the guard of {guard}")]
    EnumerationTooLarge { count: u128, guard: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
