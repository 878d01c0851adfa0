use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hermite polynomial order {n} exceeds {max}: the raw recurrence risks overflow, use hermite_function")]
    HermiteOverflow { n: usize, max: usize },

    #[error("order {n} is outside the supported range 0..={max}")]
    OrderOutOfRange { n: usize, max: usize },

    #[error("quadrature order must lie in 1..={max}, got {order}")]
    QuadratureOrder { order: usize, max: usize },

    #[error("Gauss-Hermite node solver did not converge for node index {index} (order {order})")]
    QuadratureNonConvergence { index: usize, order: usize },

    #[error("invalid oscillator parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid train specification: {0}")]
    InvalidTrain(String),

    #[error("transverse length ratio {lr_ratio} is inconsistent with omega_r/omega_x = {expected} (ratio^2 = {actual})")]
    InconsistentTransverse {
        lr_ratio: f64,
        expected: f64,
        actual: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("wavefunction does not decay at the grid boundary: |psi| = {measured:e} at t = {t} (limit {limit:e})")]
    BoundaryDecay { t: f64, measured: f64, limit: f64 },

    #[error("boundary wrap detected at t = {t}: tail mass {tail_mass:e} exceeds {limit:e}")]
    BoundaryWrap { t: f64, tail_mass: f64, limit: f64 },

    #[error("invalid stepper configuration: {0}")]
    InvalidStepper(String),

    #[error("inconsistent fit constraints: {0}")]
    FitInfeasible(String),

    #[error("check `{check}` failed: {source}")]
    Check {
        check: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_check(check: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Check {
            check,
            source: Box::new(source),
        }
    }
}
