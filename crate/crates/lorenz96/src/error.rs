use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state length {got} does not match system dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mode index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension n = {0} is not supported here (need n >= 4)")]
    UnsupportedDimension(usize),

    #[error("eigenvalue pair l = {l} never crosses the imaginary axis for n = {n}")]
    NoCrossing { l: usize, n: usize },

    #[error("no trapping region is guaranteed for G = {0} (need G > -1/4)")]
    NoTrappingGuarantee(f64),

    #[error("degenerate Hopf point: the first Lyapunov coefficient vanishes for l = {l}, n = {n}")]
    DegenerateHopf { l: usize, n: usize },

    #[error("degenerate unfolding: normal-form coefficients make the tangent slopes singular")]
    DegenerateUnfolding,

    #[error("F = 0 is excluded on the Hopf lines (the critical eigenvalue vanishes there)")]
    ExcludedParameter,

    #[error("F = {f} is below the Hopf onset F_H = {f_h}")]
    PreOnset { f: f64, f_h: f64 },

    #[error("invalid integration spec: {0}")]
    InvalidSpec(String),

    #[error("trajectory diverged near t = {t}")]
    Divergence { t: f64 },

    #[error("no periodic orbit found: {0}")]
    NoCycle(String),

    #[error("signal is not periodic: {0}")]
    NotPeriodic(String),

    #[error("wave number is undefined for a spatially constant state")]
    UndefinedWave,
}

pub type Result<T> = std::result::Result<T, Error>;
