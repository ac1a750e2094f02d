use thiserror::Error;

/// Failure modes shared across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MxtError {
    #[error("point {0:?} lies outside the extended domain")]
    Domain([f64; 3]),
    #[error("grazing direction: |cos| = {0:.3e} below threshold")]
    Grazing(f64),
    #[error("ray trapped: no boundary exit within the step budget")]
    Trapped,
    #[error("evanescent frequency: eps*mu - rho^2 = {0:.3e} <= 0")]
    Evanescent(f64),
    #[error("caustic detected at s = {0:.6}")]
    Caustic(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate level set: grad kappa vanishes at {0:?}")]
    DegenerateLevel([f64; 3]),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("ill-conditioned system (condition estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("non-monotone travel-time data violates the Herglotz condition at sample {0}")]
    Herglotz(usize),
    #[error("ray {0} leaves the grid support")]
    Coverage(usize),
    #[error("acquisition failure: {0}")]
    Acquisition(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: String, source: Box<MxtError> },
}

impl From<std::io::Error> for MxtError {
    fn from(e: std::io::Error) -> Self {
        MxtError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MxtError>;
