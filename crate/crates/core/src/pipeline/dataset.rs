// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! `make-dataset`: clean samples, optional forward-SDE corruption, and a
//! seeded train/held-out split.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{RealEmbedding, StateVector};
use crate::score::{Provenance, ScoreDataset};
use crate::unravel::{simulate_trajectory, ForwardSde};

use super::config::{purpose, ExperimentConfig};
use super::io;

pub const DATASET_SCHEMA: &str = "qdiff.dataset/1";
pub const DATASET_FILE: &str = "dataset.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    HeldOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptedCopy {
    pub t: f64,
    pub x: RealEmbedding<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: u64,
    pub split: Split,
    /// Sample of the data distribution, in the real embedding for quantum
    /// states.
    pub clean: RealEmbedding<f64>,
    /// Initial state of a trajectory-endpoint sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<RealEmbedding<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corrupted: Vec<CorruptedCopy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub schema: String,
    pub config_digest: String,
    pub provenance: Provenance,
    /// Zero for plain real vectors.
    pub n_qubits: usize,
    pub dim: usize,
    pub sample_seed: u64,
    pub split_seed: u64,
    pub corruption_seed: u64,
    pub samples: Vec<SampleRecord>,
}

impl DatasetFile {
    pub fn is_quantum(&self) -> bool {
        self.n_qubits > 0
    }

    pub fn split(&self, which: Split) -> impl Iterator<Item = &SampleRecord> {
        self.samples.iter().filter(move |s| s.split == which)
    }

    pub fn training_set(&self) -> Result<ScoreDataset<f64>> {
        ScoreDataset::new(self.provenance, self.split(Split::Train).map(|s| s.clean.clone()).collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::InvalidInput(format!(
                "dataset file {} not found; run make-dataset first",
                path.display()
            )));
        }
        let ds: Self = io::read_json(path, "dataset")?;
        if ds.schema != DATASET_SCHEMA {
            return Err(Error::Format(format!("unsupported dataset schema {:?}", ds.schema)));
        }
        if ds.samples.iter().any(|s| s.clean.0.len() != ds.dim) {
            return Err(Error::Format("dataset samples disagree with the declared dimension".into()));
        }
        Ok(ds)
    }
}

/// Seeded shuffle: the first `round(f·M)` shuffled ids are held out.
pub fn split_assignment(m: usize, held_out_fraction: f64, seed: u64) -> Vec<Split> {
    let mut ids: Vec<usize> = (0..m).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_held = ((m as f64) * held_out_fraction).round() as usize;
    let mut out = vec![Split::Train; m];
    for &i in &ids[..n_held.min(m)] {
        out[i] = Split::HeldOut;
    }
    out
}

fn corrupt_state(
    cfg: &ExperimentConfig,
    sde: &ForwardSde<f64>,
    psi: &StateVector<f64>,
    t: f64,
    seed: u64,
    id: u64,
) -> Result<StateVector<f64>> {
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let mut sde_cfg = cfg.sde_config(seed);
    sde_cfg.t_end = t;
    sde_cfg.dt = sde_cfg.dt.min(t);
    sde_cfg.renormalize_each_step = true;
    let traj = simulate_trajectory(sde, psi, &sde_cfg, id)?;
    Ok(traj.states.last().expect("trajectory has states").clone())
}

/// Builds the dataset in memory.
pub fn build_dataset(cfg: &ExperimentConfig) -> Result<DatasetFile> {
    let ds = &cfg.dataset;
    let sample_seed = cfg.seed_for(purpose::DATASET);
    let split_seed = cfg.seed_for(purpose::SPLIT);
    let corruption_seed = cfg.seed_for(purpose::FORWARD);
    let splits = split_assignment(ds.size, ds.held_out_fraction, split_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);

    let (n_qubits, samples) = match ds.kind {
        Provenance::ToyGaussian => {
            let sd = ds.toy_variance.sqrt();
            let samples = (0..ds.size)
                .map(|i| SampleRecord {
                    id: i as u64,
                    split: splits[i],
                    clean: RealEmbedding(
                        (0..ds.toy_dim)
                            .map(|_| ds.toy_mean + sd * rng.sample::<f64, _>(StandardNormal))
                            .collect(),
                    ),
                    origin: None,
                    corrupted: Vec::new(),
                })
                .collect();
            (0, samples)
        }
        Provenance::HaarStates | Provenance::TrajectoryEndpoints => {
            let states: Vec<StateVector<f64>> = (0..ds.size)
                .map(|_| {
                    StateVector::haar_random(cfg.n_qubits, &mut rng)
                        .map(|s| if ds.canonical_phase { s.canonical_phase() } else { s })
                })
                .collect::<Result<_>>()?;
            let sde = ForwardSde::new(&cfg.hamiltonian, &cfg.noise)?;
            let endpoint_time = ds.corruption_times.iter().copied().fold(0.0, f64::max);
            let samples = states
                .par_iter()
                .enumerate()
                .map(|(i, psi)| {
                    let id = i as u64;
                    let corrupted = ds
                        .corruption_times
                        .iter()
                        .map(|&t| {
                            Ok(CorruptedCopy {
                                t,
                                x: corrupt_state(cfg, &sde, psi, t, corruption_seed, id)?.embed(),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let (clean, origin) = if ds.kind == Provenance::TrajectoryEndpoints {
                        let end = corrupt_state(cfg, &sde, psi, endpoint_time, corruption_seed, id)?;
                        (end.embed(), Some(psi.embed()))
                    } else {
                        (psi.embed(), None)
                    };
                    Ok(SampleRecord {
                        id,
                        split: splits[i],
                        clean,
                        origin,
                        corrupted,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (cfg.n_qubits, samples)
        }
    };
    let dim = if n_qubits == 0 { ds.toy_dim } else { 2 << n_qubits };
    Ok(DatasetFile {
        schema: DATASET_SCHEMA.into(),
        config_digest: cfg.digest(),
        provenance: ds.kind,
        n_qubits,
        dim,
        sample_seed,
        split_seed,
        corruption_seed,
        samples,
    })
}

pub fn cmd_make_dataset(cfg: &ExperimentConfig, dir: &Path) -> Result<DatasetFile> {
    let start = Instant::now();
    let ds = build_dataset(cfg)?;
    io::write_json(&dir.join(DATASET_FILE), &ds)?;
    io::record_timing(dir, "make_dataset_seconds", start.elapsed().as_secs_f64())?;
    Ok(ds)
}
