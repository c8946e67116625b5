// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! `train`: fits the score network on the training split.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::checkpoint::{read_checkpoint, write_checkpoint};
use crate::score::{train, ScoreNet};
use crate::trajfile::digest_bytes;

use super::config::{purpose, ExperimentConfig};
use super::dataset::{DatasetFile, DATASET_FILE};
use super::io;

pub const TRAIN_SCHEMA: &str = "qdiff.train/1";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const LOSS_FILE: &str = "loss.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub schema: String,
    pub run_id: String,
    pub config_digest: String,
    pub dataset_digest: String,
    pub steps: usize,
    pub n_train: usize,
    pub n_params: usize,
    pub initial_loss: Option<f64>,
    pub final_raw_loss: Option<f64>,
    pub final_smoothed_loss: Option<f64>,
    /// SHA-256 of `checkpoint.bin`.
    pub checkpoint_sha256: String,
}

pub fn cmd_train(cfg: &ExperimentConfig, dir: &Path) -> Result<TrainRecord> {
    let start = Instant::now();
    let data = DatasetFile::load(&dir.join(DATASET_FILE))?;
    let train_set = data.training_set()?;
    let tcfg = cfg.train_config();
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed_for(purpose::INIT));
    let net = ScoreNet::new(train_set.dim(), tcfg.hidden, cfg.ou.t_end, &mut init_rng)?;
    let out = train(net, &train_set, &cfg.ou, &tcfg)?;

    let digest = cfg.digest();
    let mut ckpt = Vec::new();
    write_checkpoint(&mut ckpt, &out.net, &digest_bytes(&digest))?;
    io::atomic_write(&dir.join(CHECKPOINT_FILE), &ckpt)?;
    let mut csv = Vec::new();
    out.curve.write_csv(&mut csv)?;
    io::atomic_write(&dir.join(LOSS_FILE), &io::csv_with_digest(&digest, &csv))?;

    let record = TrainRecord {
        schema: TRAIN_SCHEMA.into(),
        run_id: cfg.run_id.clone(),
        config_digest: digest,
        dataset_digest: data.config_digest.clone(),
        steps: tcfg.steps,
        n_train: train_set.len(),
        n_params: out.net.n_params(),
        initial_loss: out.curve.raw.first().copied(),
        final_raw_loss: out.curve.raw.last().copied(),
        final_smoothed_loss: out.curve.final_smoothed(),
        checkpoint_sha256: io::sha256_hex(&ckpt),
    };
    io::write_json(&dir.join("train_metrics.json"), &record)?;
    io::record_timing(dir, "train_seconds", start.elapsed().as_secs_f64())?;
    Ok(record)
}

/// Loads `checkpoint.bin` from a run directory.
pub fn load_checkpoint(dir: &Path) -> Result<ScoreNet<f64>> {
    let path = dir.join(CHECKPOINT_FILE);
    let bytes = std::fs::read(&path).map_err(|e| {
        Error::InvalidInput(format!("cannot read checkpoint {}: {e}; run train first", path.display()))
    })?;
    Ok(read_checkpoint(bytes.as_slice())?.0)
}
