use thiserror::Error;

/// Errors raised by the pricing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("characteristic function argument outside admissible strip: Re(theta) = {re_theta} >= {bound}")]
    Strip { re_theta: f64, bound: f64 },

    #[error("approximation not defined in regime {regime}: {reason}")]
    Regime { regime: &'static str, reason: String },

    #[error("Levy measure {0} has no path sampler")]
    UnsupportedMeasure(String),

    #[error("Fourier pricer did not reach tolerance: estimate {estimate:e}, requested {requested:e}")]
    FourierNonConvergence { estimate: f64, requested: f64 },

    #[error("reference pricers disagree: fft {fft} (+/- {fft_err:e}) vs monte carlo {mc} (+/- {mc_err:e})")]
    OracleDisagreement {
        fft: f64,
        fft_err: f64,
        mc: f64,
        mc_err: f64,
    },

    #[error("Levy measure violates model assumptions: {0}")]
    Assumption(String),

    #[error("degenerate convergence fit: {0}")]
    DegenerateFit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
