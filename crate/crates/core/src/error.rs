use thiserror::Error;

/// Errors raised by the analytic and numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state leaves the y = 0 plane (|y| = {0:e})")]
    OutOfPlane(f64),

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("stationary denominator D = {0:e} is not positive")]
    NonPositiveDenominator(f64),

    #[error("equatorial target: driving amplitude is undefined")]
    EquatorialTarget,

    #[error("drift is singular at r = 0 for cos(theta0) != 0")]
    SingularDrift,

    #[error("quadrature did not converge: value {value}, error estimate {err_estimate:e}")]
    QuadratureNonConvergence { value: f64, err_estimate: f64 },

    #[error("delay tau = {tau} is shorter than 5 steps of dt = {dt}")]
    UnresolvedDelay { tau: f64, dt: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "eta", value: eta, reason: "detection efficiency must lie in (0, 1]" })
    }
}

pub(crate) fn check_dephasing(gamma_deph: f64) -> Result<()> {
    if gamma_deph >= 0.0 && gamma_deph.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "gamma_deph",
            value: gamma_deph,
            reason: "dephasing rate must be finite and non-negative",
        })
    }
}
