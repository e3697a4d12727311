use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no guided HE11 root: {0}")]
    NoGuidedRoot(String),
    #[error("root finder did not converge: {0}")]
    NonConvergence(String),
    #[error("point at r = {r:e} m lies inside the fiber (radius {radius:e} m)")]
    InsideFiber { r: f64, radius: f64 },
    #[error("coherence group {group} mixes beams of different optical frequency")]
    MixedWavelengthGroup { group: i64 },
    #[error("atom data parse error: {0}")]
    Parse(String),
    #[error("atom data schema error: {0}")]
    Schema(String),
    #[error("forbidden dipole line: {0}")]
    SelectionRule(String),
    #[error("unknown level or manifold: {0}")]
    UnknownLevel(String),
    #[error("optical frequency lies within the resonance guard of {level} F'={f}: detuning {detuning_hz:e} Hz")]
    OnResonance { level: String, f: String, detuning_hz: f64 },
    #[error("light-shift difference does not change sign in [{lo:e}, {hi:e}] m")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("field amplitude is zero")]
    ZeroField,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("surface distance must be positive, got {0:e} m")]
    NonPositiveDistance(f64),
    #[error("no trap minimum: {0}")]
    NoMinimum(String),
    #[error("harmonic fit along {axis} is poor (R^2 = {r_squared:.4})")]
    PoorFit { axis: String, r_squared: f64 },
    #[error("frequency must be positive, got {0:e} Hz")]
    NonPositiveFrequency(f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error stems from user input rather than from the physics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Config(_)
                | Error::Parse(_)
                | Error::Schema(_)
                | Error::SelectionRule(_)
                | Error::UnknownLevel(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
