use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("Airy function overflows at x = {0}; use the scaled variant")]
    AiryOverflow(f64),

    #[error("singular basis at z = {z} nm (Wronskian {wronskian:e})")]
    SingularBasis { z: f64, wronskian: f64 },

    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("found {found} bound states, need at least {needed}")]
    InsufficientStates { found: usize, needed: usize },

    #[error("singular matching system: {0}")]
    SingularSystem(String),

    #[error("failed to parse material table: {0}")]
    Parse(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
