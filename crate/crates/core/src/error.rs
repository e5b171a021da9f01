use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains a non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("field is not in the mean-zero subspace (|mean| = {mean:.3e}, tolerance {tolerance:.3e})")]
    NotMeanZero { mean: f64, tolerance: f64 },

    #[error("spectral symbol is not positive at mode {index} (value {value:.3e})")]
    NonPositiveSymbol { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("interface too close to the domain boundary (margin {margin:.4}, required {required:.4})")]
    InterfaceNearBoundary { margin: f64, required: f64 },

    #[error("not a sharp configuration: |u| deviates from 1 by {deviation:.3e} at node {index}")]
    NotSharp { index: usize, deviation: f64 },

    #[error("no interface: the field does not change sign")]
    NoInterface,

    #[error("vanishing gradient on the interface at contour point {index}")]
    VanishingGradient { index: usize },

    #[error("unsupported dimension {0} for this operation")]
    UnsupportedDimension(usize),

    #[error("empty mask: no nodes lie farther than the band from the interface")]
    EmptyMask,

    #[error("Newton solver for the {stage} sub-step did not converge in {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    NewtonFailed {
        stage: &'static str,
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("dissipation violated: energy rose from {before:.12e} to {after:.12e} (tolerance {tolerance:.3e})")]
    DissipationViolated { before: f64, after: f64, tolerance: f64 },

    #[error("a-priori bound violated: {0}")]
    BoundViolated(String),

    #[error("non-finite energy in state")]
    InfiniteEnergy,

    #[error("ill-conditioned radial solve: {0}")]
    IllConditioned(String),

    #[error("snapshot i/o: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
