//! Command implementations behind the `secom` binary.

pub mod chunkfile;
pub mod commands;
pub mod config;
pub mod experiment;
pub mod output;
pub mod selftest;

use thiserror::Error;

pub use config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}
