use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("quadrature did not converge on panel [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("profile derivative is not finite at the origin")]
    SingularOrigin,

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("no radius R in ({r0}, {r_max}] satisfies the slope condition; raise r_max")]
    RadiusNotFound { r0: f64, r_max: f64 },

    #[error("perturbation check {item} failed at r = {r}")]
    Verification { item: String, r: f64 },

    #[error("perturbation search exhausted after {attempts} candidates")]
    SearchExhausted {
        attempts: usize,
        last_record: Option<Box<crate::perturbation::VerificationRecord>>,
    },

    #[error("internal consistency check failed for {quantity} at r = {r}: {detail}")]
    Consistency {
        quantity: String,
        r: f64,
        detail: String,
    },

    #[error("radius {rho} is outside the sampled range (max {max})")]
    OutOfRange { rho: f64, max: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
