// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("non-physical density matrix: {0}")]
    NonPhysical(String),

    #[error("non-finite value at step {step}{}: {context}", channel.map(|c| format!(", channel {c}")).unwrap_or_default())]
    NonFinite {
        step: usize,
        channel: Option<usize>,
        context: String,
    },

    #[error("divergence at step {step}: norm {norm} exceeds {limit}")]
    Divergence { step: usize, norm: f64, limit: f64 },

    #[error("training diverged at step {step}: loss = {loss}")]
    TrainingDiverged { step: usize, loss: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("file format error: {0}")]
    Format(String),

    #[error("numerical check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 for validation failures, 2 for numerical-check
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CheckFailed(_)
            | Error::NonFinite { .. }
            | Error::Divergence { .. }
            | Error::TrainingDiverged { .. } => 2,
            _ => 1,
        }
    }
}
