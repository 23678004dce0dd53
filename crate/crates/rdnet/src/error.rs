use thiserror::Error;

/// Error type shared by all toolkit modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("scene placement failed after {attempts} attempts (grid too dense for {targets} targets)")]
    Placement { attempts: usize, targets: usize },

    #[error("frequency {freq} is not on the label grid (axis {axis})")]
    OffGrid { freq: f64, axis: &'static str },

    #[error("dataset format error: {0}")]
    Format(String),

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
