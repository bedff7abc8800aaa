use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension d = {0}; the model requires d >= 3")]
    InvalidDimension(u32),
    #[error("invalid diffusion exponent m = {0}; expected a finite m > 0")]
    InvalidExponent(f64),
    #[error("scaling family is degenerate at m = 1")]
    DegenerateScaling,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operation requires {expected}, got {found}")]
    WrongRegime { expected: String, found: String },
    #[error("shot from a = {a} turned around at r = {r_turn} with W = {w_min} before reaching zero")]
    NoZeroCrossing { a: f64, r_turn: f64, w_min: f64 },
    #[error("shot from a = {a} exceeded r_limit = {r_limit}")]
    ShotEscaped { a: f64, r_limit: f64 },
    #[error("integration step underflow at r = {r}")]
    StepUnderflow { r: f64 },
    #[error("no zero contact angle: shooting function has no sign change on [{a_lo}, {a_hi}] (min |contact| = {min_abs})")]
    NoZeroContactAngle { a_lo: f64, a_hi: f64, min_abs: f64 },
    #[error("discrete equilibrium solve failed: {0}")]
    EquilibriumFailed(String),
    #[error("Newton iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NewtonDiverged { residual: f64, iterations: usize },
    #[error("singular Jacobian at row {0}")]
    SingularJacobian(usize),
    #[error("time step collapsed below dt_min = {dt_min} at t = {t}")]
    StepFailure { t: f64, dt_min: f64 },
    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}
