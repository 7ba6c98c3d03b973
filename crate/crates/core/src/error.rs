use thiserror::Error;

/// Failures raised by the Kepler routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KeplerError {
    #[error("singular origin: |r| = {r_mag:e} is below the floor {floor:e}")]
    SingularOrigin { r_mag: f64, floor: f64 },

    #[error("LRL direction undefined (circular orbit): |A| = {a_mag:e}")]
    DegenerateDirection { a_mag: f64 },

    #[error("radial state: |L| = {l_mag:e}")]
    RadialState { l_mag: f64 },

    #[error("inadmissible parameter: square-root argument {argument:e} is negative")]
    Inadmissible { argument: f64 },

    #[error("energy {energy:e} lies in the E = 0 branch; rescaled LRL vector undefined")]
    ZeroEnergy { energy: f64 },

    #[error("radius-invariant gauge is singular at an apsis (r.v = {radial:e})")]
    ApsisGauge { radial: f64 },

    #[error("collision at t = {t}: |r| = {r_mag:e}")]
    Collision { t: f64, r_mag: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state encountered")]
    NonFinite,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl KeplerError {
    /// Degenerate-state errors map to one CLI exit code, parameter errors to another.
    pub fn is_inadmissible(&self) -> bool {
        matches!(self, KeplerError::Inadmissible { .. })
    }
}

pub type Result<T> = std::result::Result<T, KeplerError>;
