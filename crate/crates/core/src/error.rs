use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the geometry, solver, and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix norm {0:e} is too small to decompose")]
    NearZeroMatrix(f64),
    #[error("viewing rays are parallel; the pair carries no depth information")]
    DegenerateRays,
    #[error("reprojected direction vanishes; the pair is anti-consistent with the pose")]
    DegenerateEpsilon,
    #[error("point lies on or behind the camera plane (depth {0:e})")]
    BehindCamera(f64),
    #[error("need at least 6 pairs with positive weight, found {0}")]
    TooFewEffectivePairs(usize),
    #[error("weight vector has length {weights}, expected {pairs}")]
    WeightLengthMismatch { pairs: usize, weights: usize },
    #[error("leading block of the polynomial system is ill-conditioned (ratio {0:e})")]
    IllConditionedB1(f64),
    #[error("no essential-matrix candidate passed the chirality filter")]
    NoValidCandidate,
    #[error("residual scale {0:e} is zero; weights are undefined")]
    ZeroScale(f64),
    #[error("every sampling round failed to produce a model")]
    NoModelFound,
    #[error("scene generation gave up after {rounds} rejection rounds ({accepted} of {requested} points)")]
    GenerationExhausted {
        rounds: usize,
        accepted: usize,
        requested: usize,
    },
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

impl Error {
    /// Short machine-readable tag for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NearZeroMatrix(_) => "NearZeroMatrix",
            Error::DegenerateRays => "DegenerateRays",
            Error::DegenerateEpsilon => "DegenerateEpsilon",
            Error::BehindCamera(_) => "BehindCamera",
            Error::TooFewEffectivePairs(_) => "TooFewEffectivePairs",
            Error::WeightLengthMismatch { .. } => "WeightLengthMismatch",
            Error::IllConditionedB1(_) => "IllConditionedB1",
            Error::NoValidCandidate => "NoValidCandidate",
            Error::ZeroScale(_) => "ZeroScale",
            Error::NoModelFound => "NoModelFound",
            Error::GenerationExhausted { .. } => "GenerationExhausted",
            Error::InvalidConfig { .. } => "InvalidConfig",
        }
    }
}
