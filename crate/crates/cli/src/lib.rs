//! Pipeline driver: ingest backbones, compute diagrams and landscapes, and
//! produce distance matrices, embeddings, tests, generators and noise
//! sweeps as files under one output directory.

use std::fmt;

pub mod commands;
pub mod config;
pub mod manifest;
pub mod svg;
pub mod synthetic;

/// Error of a pipeline command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit code 2).
    Config(String),
    /// Some structures failed; the others were written (exit code 1).
    Failures(Vec<manifest::Failure>),
    /// Any other error (exit code 1).
    Run(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failures(_) | CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Failures(list) => {
                write!(f, "{} structure(s) failed:", list.len())?;
                for x in list {
                    write!(f, "\n  {} [{}]: {}", x.id, x.stage, x.message)?;
                }
                Ok(())
            }
            CliError::Run(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<knotph_core::Error> for CliError {
    fn from(e: knotph_core::Error) -> Self {
        CliError::Run(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}
