//! Batch front end: TOML run configs, the excitation pipeline and result
//! files with a hashed manifest.

pub mod config;
pub mod manifest;
pub mod pipeline;

pub use config::{load, parse, prepare, ConfigError, RunConfig};
pub use pipeline::{execute, Command};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "QCEX_THREADS";

/// Parses the thread-count override, if set.
pub fn threads_from_env() -> Result<Option<usize>, ConfigError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError::new(THREADS_ENV, format!("expected a positive integer, got '{v}'"))),
        },
    }
}
