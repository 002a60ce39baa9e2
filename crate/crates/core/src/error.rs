use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),

    #[error("player {player} has zero exploration rate; a positive temperature is required")]
    ZeroTemperature { player: usize },

    #[error("profile is not interior (player {player}, action {action} has probability {value})")]
    NotInterior {
        player: usize,
        action: usize,
        value: f64,
    },

    #[error("game is not weighted zero-sum (max residual {residual:e})")]
    NotZeroSum { residual: f64 },

    #[error("exhaustive validation would visit {count} pure profiles (limit {limit}); use sampled mode")]
    TooManyProfiles { count: f64, limit: f64 },

    #[error("reference profile is not a QRE (fixed-point residual {residual:e})")]
    NotQre { residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
