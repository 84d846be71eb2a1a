use thiserror::Error;

/// Errors raised by model construction, analytics and optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("state {state} out of range for a {n}-state source")]
    StateOutOfRange { state: usize, n: usize },

    #[error("degenerate source: {0}")]
    Degenerate(String),

    #[error("channel mode: {0}")]
    ChannelMode(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("stationary solve did not converge (residual {residual:.3e})")]
    Convergence { residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("metric diverges: {0}")]
    Divergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {value} is not in [0, 1]")))
    }
}
