use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error("invalid network configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("effective channel of user {user} at frame {frame} has norm {norm:.3e} above the cap {cap:.3e}")]
    ChannelCap { user: usize, frame: u64, norm: f64, cap: f64 },
    #[error(transparent)]
    Core(#[from] ee_core::Error),
}

pub type Result<T> = std::result::Result<T, NetsimError>;
