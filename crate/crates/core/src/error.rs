use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("initial profile is not positive at r = {r} (value {value})")]
    RejectsNonPositiveProfile { r: f64, value: f64 },
    #[error("initial radius b = {0} must lie in (0, 1)")]
    RejectsRadius(f64),
    #[error("dimension n = {0} must be at least 2")]
    RejectsDimension(u32),
    #[error("tabulated k violates its Lipschitz bound: {detail}")]
    RejectsLipschitz { detail: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("source compatibility defect {defect:e} exceeds {limit:e}")]
    IncompatibleSource { defect: f64, limit: f64 },
    #[error("zero pivot in tridiagonal factorization at row {0}")]
    SingularSystem(usize),
    #[error("radius {0} is outside [0, 1]")]
    OutOfDomain(f64),

    #[error("explicit CFL number {cfl:.3} exceeds 1 (dt = {dt:e})")]
    CflViolation { cfl: f64, dt: f64 },
    #[error("density undershoot: min u = {min:e}, max u = {max:e}")]
    NegativeDensity { min: f64, max: f64 },

    #[error("radius step left (0, 1): h = {h}")]
    LeftDomain { h: f64 },
    #[error("Picard iteration did not converge in {iterations} iterations (last contraction factor {last_factor})")]
    NoConvergence { iterations: usize, last_factor: f64 },
    #[error("Picard iterate left the admissible set at iteration {iteration}: {detail}")]
    BViolation { iteration: usize, detail: String },

    #[error("h_exact requested at t = {t} past the collapse time {collapse_time}")]
    PastCollapse { t: f64, collapse_time: f64 },
}
