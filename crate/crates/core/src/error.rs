use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time index {index} out of range for {steps} steps")]
    TimeOutOfRange { index: usize, steps: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("state is not normalized (|norm - 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("initial state is not an explicit product of normalized single-spin states")]
    NotProductState,

    #[error("eigensolver backend failed: {0}")]
    EigBackend(String),

    #[error("eigenpair residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    EigResidual { residual: f64, tolerance: f64 },

    #[error("requested {requested} eigenpairs from an operator of dimension {dim}")]
    TooManyEigenpairs { requested: usize, dim: usize },

    #[error(
        "ground space is degenerate (gap {gap:.3e}); pin the trajectory with a penalty state"
    )]
    DegenerateGround { gap: f64 },

    #[error("clock construction needs at least two time steps, got {0}")]
    TooFewSteps(usize),

    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),

    #[error("wavepacket amplitude {amplitude:.3e} at the grid boundary; enlarge the grid")]
    GridTooSmall { amplitude: f64 },

    #[error("number of Fourier modes must be odd, got {0}")]
    EvenFourierModes(usize),

    #[error("quadrature did not settle below {tolerance:.1e} within {samples} samples")]
    QuadratureStall { tolerance: f64, samples: usize },

    #[error(
        "conjugate gradient hit the iteration cap {max_iterations} (best residual {best:.3e})"
    )]
    CgIterationCap {
        max_iterations: usize,
        best: f64,
        history: Vec<f64>,
    },

    #[error("propagator providers disagree: {0}")]
    ProviderMismatch(String),

    #[error("work counters are empty; run a solve first")]
    EmptyCounters,

    #[error("a slice norm vanished; cannot renormalize")]
    VanishingSlice,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
