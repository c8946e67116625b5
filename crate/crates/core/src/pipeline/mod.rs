// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end commands behind the `qdiff` CLI. Each command reads and writes
//! one run directory.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod io;
pub mod oracle_check;
pub mod report;
pub mod train_cmd;

pub use config::ExperimentConfig;
pub use dataset::cmd_make_dataset;
pub use eval::{cmd_denoise_eval, MetricsRecord};
pub use oracle_check::{cmd_oracle_check, OracleReport};
pub use report::cmd_report;
pub use train_cmd::cmd_train;
