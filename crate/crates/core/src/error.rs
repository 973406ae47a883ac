use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{name}` ({value}): {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("success probability {ps} is outside (0, {limit}]")]
    ProbabilityOutOfRange { ps: f64, limit: f64 },

    #[error(
        "requested P_S = {ps} exceeds the divergence guard {safety} x P_S^max = {limit}; \
         Omega(t) diverges where rho_uu reaches zero"
    )]
    DriveDivergence { ps: f64, safety: f64, limit: f64 },

    #[error("uncoupled-state population is non-positive ({rho_uu:e}) at sample {index} (t = {t})")]
    NonPositivePopulation { index: usize, t: f64, rho_uu: f64 },

    #[error("phase integrand is singular (Re[conj(alpha_e) z] = 0) at sample {index} (t = {t})")]
    SingularPhaseIntegrand { index: usize, t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e}); the system is too stiff for the explicit integrator")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {steps} steps before reaching t = {t_end} (stopped at t = {t})")]
    TooManySteps { steps: usize, t: f64, t_end: f64 },

    #[error("waveform has zero norm")]
    ZeroNorm,

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("malformed waveform file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain { name, value, reason }
    }
}
