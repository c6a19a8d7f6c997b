use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid run spec: {0}")]
    Config(String),

    #[error("cannot aggregate group {group}: {detail}")]
    Aggregation { group: String, detail: String },

    #[error(transparent)]
    Planning(#[from] papomcpow::Error),

    #[error("spec parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
