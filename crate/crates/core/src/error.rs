use thiserror::Error;

/// Errors raised by the simulation and analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not Hermitian: max |H - H^dagger| = {defect:e}")]
    NonHermitianInput { defect: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("dimension {dim} outside supported range [{min}, {max}]")]
    DimensionOutOfRange { dim: usize, min: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state is not normalized: norm = {norm:.17e}")]
    UnnormalizedState { norm: f64 },
    #[error("step count {steps} is below the minimum of {min}")]
    StepCountTooSmall { steps: usize, min: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error(
        "PhaseResolutionExceeded: overlap phase increment {increment:.6} rad at step {step} (t = {time:.6}) \
         reaches the pi/2 guard; refine the trajectory (more steps)"
    )]
    PhaseResolutionExceeded { step: usize, time: f64, increment: f64 },
    #[error("NodeEncountered: overlap with the initial state vanishes at sample {index} (t = {time:.12})")]
    NodeEncountered { index: usize, time: f64 },
    #[error("insufficient samples: need {needed}, found {found}")]
    InsufficientSamples { needed: usize, found: usize },
    #[error("range mismatch: {0}")]
    RangeMismatch(String),
    #[error("energy variance vanishes; bound is 0/0")]
    ZeroVariance,
    #[error("speed limits require a single time-independent segment")]
    TimeDependentScheduleUnsupported,
    #[error("TanDivergence: S0 within node tolerance of pi at sample {index} (t = {time:.12})")]
    TanDivergence { index: usize, time: f64 },
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("unknown built-in scenario '{0}'")]
    UnknownScenario(String),
    #[error("scenario file: {0}")]
    Parse(String),
    #[error("scenario file field '{field}': {message}")]
    Validation { field: String, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Input problems (bad files, bad parameters) as opposed to failures of the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonHermitianInput { .. }
                | Error::DimensionOutOfRange { .. }
                | Error::DimensionMismatch { .. }
                | Error::UnnormalizedState { .. }
                | Error::StepCountTooSmall { .. }
                | Error::InvalidSchedule(_)
                | Error::ParamOutOfRange(_)
                | Error::UnknownScenario(_)
                | Error::Parse(_)
                | Error::Validation { .. }
                | Error::TimeDependentScheduleUnsupported
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
