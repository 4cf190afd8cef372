use thiserror::Error;

/// Failures raised by the signal models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "load resistance {load_resistance} ohm does not exceed 0.5*sqrt(L/C) = {limit} ohm; \
         poles are not complex-conjugate (overdamped or critically damped)"
    )]
    Overdamped { load_resistance: f64, limit: f64 },

    #[error("symbol {symbol}: pulse [{start}, {end}] does not fit into the symbol period {period}")]
    DepthOutOfRange {
        symbol: usize,
        start: f64,
        end: f64,
        period: f64,
    },

    #[error("sampling interval {dt} s too coarse for ringing frequency (need dt <= {limit} s)")]
    ResolutionTooCoarse { dt: f64, limit: f64 },

    #[error("spectrum is undefined at f = 0 (DC mass is reported separately)")]
    ZeroFrequency,

    #[error("step {dt} s is not below C*R_L = {limit} s; simplified iteration is unstable")]
    UnstableStep { dt: f64, limit: f64 },

    #[error("pattern has {symbols} symbols but {required} are needed")]
    PatternTooShort { symbols: usize, required: usize },

    #[error("waveform grids do not match: {0}")]
    GridMismatch(String),

    #[error("oversampling factor {oversampling} is not divisible by decimation {decimation}")]
    IndivisibleDecimation { oversampling: usize, decimation: usize },

    #[error("exhaustive detection supports at most {max} symbols, got {symbols}")]
    TooManyBits { symbols: usize, max: usize },

    #[error("poles {first} and {second} are not distinct")]
    RepeatedPoles { first: String, second: String },

    #[error("pole {0} is not in the open left half-plane")]
    UnstablePole(String),

    #[error("degenerate topology: {0}")]
    DegenerateTopology(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            reason: format!("must be finite and >= 0, got {value}"),
        })
    }
}
