// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! `denoise-eval`: corrupt held-out samples to the horizon, denoise them,
//! and compare against the noisy input and a zero-score baseline.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{fidelity_pure, RealEmbedding, StateVector};
use crate::reverse::{
    denoise, denoise_quantum, denoise_state, write_reverse_paths, NoiseScale, ReverseConfig, ReverseMode,
    ReversePath, ScoreSource,
};
use crate::score::{silverman_bandwidth, GaussianScore, KdeScore, ScoreModel, ScoreNet, ZeroScore};
use crate::stats::{ks_statistic, mean_sd, median, paired_summary, PairedSummary};
use crate::unravel::{simulate_trajectory, ForwardSde};

use super::config::{purpose, ExperimentConfig};
use super::dataset::{DatasetFile, SampleRecord, Split, DATASET_FILE};
use super::io;
use super::train_cmd::load_checkpoint;

pub const METRICS_SCHEMA: &str = "qdiff.metrics/1";
pub const METRICS_FILE: &str = "metrics.json";
pub const PER_STATE_FILE: &str = "per_state.jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumMetrics {
    pub mean_noisy_fidelity: f64,
    pub median_noisy_fidelity: f64,
    pub mean_denoised_fidelity: f64,
    pub median_denoised_fidelity: f64,
    pub mean_baseline_fidelity: f64,
    /// Mean denoised minus mean noisy fidelity.
    pub improvement: f64,
    pub mean_noisy_trace_distance: f64,
    pub mean_denoised_trace_distance: f64,
    /// Paired `denoised − noisy` fidelity.
    pub vs_noisy: PairedSummary,
    /// Paired `denoised − baseline` fidelity.
    pub vs_baseline: PairedSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorMetrics {
    pub clean_mean: f64,
    pub clean_variance: f64,
    pub denoised_mean: f64,
    pub denoised_variance: f64,
    pub baseline_mean: f64,
    pub baseline_variance: f64,
    /// KS statistic between first coordinates of clean and denoised samples.
    pub ks_denoised: f64,
    pub ks_noisy: f64,
    pub mse_noisy: f64,
    pub mse_denoised: f64,
}

/// Aggregate result of one evaluation; contains no timing information.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub schema: String,
    pub run_id: String,
    pub config_digest: String,
    pub mode: ReverseMode,
    pub score_source: ScoreSource,
    pub noise: NoiseScale,
    pub posterior_samples: usize,
    pub reverse_steps: usize,
    pub corruption_time: f64,
    pub n_held_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<QuantumMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<VectorMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerStateRecord {
    pub id: u64,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noisy_fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denoised_fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noisy_trace_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denoised_trace_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noisy: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denoised: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub metrics: MetricsRecord,
    pub per_state: Vec<PerStateRecord>,
    pub paths: Vec<ReversePath<f64>>,
}

fn build_score(
    cfg: &ExperimentConfig,
    data: &DatasetFile,
    dir: &Path,
) -> Result<Box<dyn ScoreModel<f64>>> {
    Ok(match cfg.reverse.score_source {
        ScoreSource::Network => {
            let net: ScoreNet<f64> = load_checkpoint(dir)?;
            if net.d_in() != data.dim {
                return Err(Error::DimensionMismatch {
                    expected: data.dim,
                    found: net.d_in(),
                });
            }
            Box::new(net)
        }
        ScoreSource::KdeOracle => {
            let points = data.training_set()?.points();
            let bandwidth = match cfg.eval.kde_bandwidth {
                Some(h) => h,
                None => silverman_bandwidth(&points)?,
            };
            Box::new(KdeScore {
                ou: cfg.ou,
                ensemble: points,
                bandwidth,
            })
        }
        ScoreSource::Analytic => {
            if data.is_quantum() {
                return Err(Error::Config(
                    "the analytic score is only available for toy-gaussian data".into(),
                ));
            }
            Box::new(GaussianScore {
                ou: cfg.ou,
                mean: vec![cfg.dataset.toy_mean; data.dim],
                variance: cfg.dataset.toy_variance,
            })
        }
        ScoreSource::Zero => Box::new(ZeroScore { dim: data.dim }),
    })
}

fn state_of(x: &[f64]) -> Result<StateVector<f64>> {
    StateVector::from_embedding(&RealEmbedding(x.to_vec()))?.normalize()
}

/// `√(1 − F)`, the trace distance between two pure states.
fn pure_trace_distance(fidelity: f64) -> f64 {
    (1.0 - fidelity).max(0.0).sqrt()
}

fn corrupt_all(cfg: &ExperimentConfig, held: &[&SampleRecord], quantum: bool) -> Result<Vec<Vec<f64>>> {
    let t = cfg.ou.t_end;
    let seed = cfg.seed_for(purpose::CORRUPT);
    match cfg.reverse.mode {
        ReverseMode::Ou => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            held.iter().map(|s| cfg.ou.sample_forward(&s.clean.0, t, &mut rng)).collect()
        }
        ReverseMode::QuantumLiteral => {
            if !quantum {
                return Err(Error::Config("quantum-literal mode needs a quantum dataset".into()));
            }
            let sde = ForwardSde::new(&cfg.hamiltonian, &cfg.noise)?;
            let mut sde_cfg = cfg.sde_config(seed);
            sde_cfg.t_end = t;
            sde_cfg.dt = sde_cfg.dt.min(t);
            sde_cfg.renormalize_each_step = true;
            held.par_iter()
                .map(|s| {
                    let psi = state_of(&s.clean.0)?;
                    let traj = simulate_trajectory(&sde, &psi, &sde_cfg, s.id)?;
                    Ok(traj.states.last().expect("trajectory has states").embed().0)
                })
                .collect()
        }
    }
}

/// Runs the evaluation in memory.
pub fn evaluate(cfg: &ExperimentConfig, data: &DatasetFile, dir: &Path) -> Result<EvalOutcome> {
    let held: Vec<&SampleRecord> = data.split(Split::HeldOut).collect();
    if held.is_empty() {
        return Err(Error::InvalidInput("held-out set is empty".into()));
    }
    let quantum = data.is_quantum();
    let score = build_score(cfg, data, dir)?;
    let score: &dyn ScoreModel<f64> = score.as_ref();
    let rcfg = cfg.reverse_config();
    let baseline_cfg = ReverseConfig {
        score_source: ScoreSource::Zero,
        noise: NoiseScale::DriftOnly,
        posterior_samples: 1,
        ..rcfg.clone()
    };
    let zero = ZeroScore { dim: data.dim };
    let noisy = corrupt_all(cfg, &held, quantum)?;
    let digest = cfg.digest();
    let t_end = cfg.ou.t_end;
    let sde = ForwardSde::new(&cfg.hamiltonian, &cfg.noise)?;
    let n_export = cfg.eval.export_paths.min(held.len());

    let run_one = |i: usize| -> Result<(Vec<f64>, Vec<f64>, Option<ReversePath<f64>>)> {
        let id = held[i].id;
        let x = &noisy[i];
        match (quantum, rcfg.mode) {
            (true, ReverseMode::Ou) => {
                let est = denoise_state(&RealEmbedding(x.clone()), &rcfg, &cfg.ou, score, id)?;
                let base = denoise_state(&RealEmbedding(x.clone()), &baseline_cfg, &cfg.ou, &zero, id)?;
                let path = if i < n_export {
                    Some(denoise(x, &rcfg, &cfg.ou, score, id)?.path)
                } else {
                    None
                };
                Ok((est.embed().0, base.embed().0, path))
            }
            (true, ReverseMode::QuantumLiteral) => {
                let psi = state_of(x)?;
                let (est, path) = denoise_quantum(&psi, &rcfg, t_end, &sde, score, id)?;
                let (base, _) = denoise_quantum(&psi, &baseline_cfg, t_end, &sde, &zero, id)?;
                Ok((est.embed().0, base.embed().0, (i < n_export).then_some(path)))
            }
            (false, _) => {
                let est = denoise(x, &rcfg, &cfg.ou, score, id)?;
                let base = denoise(x, &baseline_cfg, &cfg.ou, &zero, id)?;
                Ok((est.estimate, base.estimate, (i < n_export).then_some(est.path)))
            }
        }
    };
    let results = (0..held.len()).into_par_iter().map(run_one).collect::<Result<Vec<_>>>()?;

    let mut per_state = Vec::with_capacity(held.len());
    let mut paths = Vec::new();
    let (mut quantum_metrics, mut vector_metrics) = (None, None);
    if quantum {
        let (mut f_noisy, mut f_den, mut f_base) = (Vec::new(), Vec::new(), Vec::new());
        for (i, (est, base, path)) in results.into_iter().enumerate() {
            let clean = state_of(&held[i].clean.0)?;
            let fn_ = fidelity_pure(&clean, &state_of(&noisy[i])?)?;
            let fd = fidelity_pure(&clean, &state_of(&est)?)?;
            let fb = fidelity_pure(&clean, &state_of(&base)?)?;
            f_noisy.push(fn_);
            f_den.push(fd);
            f_base.push(fb);
            per_state.push(PerStateRecord {
                id: held[i].id,
                config_digest: digest.clone(),
                noisy_fidelity: Some(fn_),
                denoised_fidelity: Some(fd),
                baseline_fidelity: Some(fb),
                noisy_trace_distance: Some(pure_trace_distance(fn_)),
                denoised_trace_distance: Some(pure_trace_distance(fd)),
                noisy: None,
                denoised: None,
            });
            paths.extend(path);
        }
        let mean = |v: &[f64]| mean_sd(v).0;
        let td = |v: &[f64]| mean(&v.iter().map(|f| pure_trace_distance(*f)).collect::<Vec<_>>());
        quantum_metrics = Some(QuantumMetrics {
            mean_noisy_fidelity: mean(&f_noisy),
            median_noisy_fidelity: median(&f_noisy),
            mean_denoised_fidelity: mean(&f_den),
            median_denoised_fidelity: median(&f_den),
            mean_baseline_fidelity: mean(&f_base),
            improvement: mean(&f_den) - mean(&f_noisy),
            mean_noisy_trace_distance: td(&f_noisy),
            mean_denoised_trace_distance: td(&f_den),
            vs_noisy: paired_summary(&f_noisy, &f_den),
            vs_baseline: paired_summary(&f_base, &f_den),
        });
    } else {
        let clean0: Vec<f64> = held.iter().map(|s| s.clean.0[0]).collect();
        let mut den0 = Vec::new();
        let mut base0 = Vec::new();
        let (mut se_noisy, mut se_den) = (0.0, 0.0);
        for (i, (est, base, path)) in results.into_iter().enumerate() {
            let c = &held[i].clean.0;
            se_noisy += c.iter().zip(&noisy[i]).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            se_den += c.iter().zip(&est).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            den0.push(est[0]);
            base0.push(base[0]);
            per_state.push(PerStateRecord {
                id: held[i].id,
                config_digest: digest.clone(),
                noisy_fidelity: None,
                denoised_fidelity: None,
                baseline_fidelity: None,
                noisy_trace_distance: None,
                denoised_trace_distance: None,
                noisy: Some(noisy[i].clone()),
                denoised: Some(est),
            });
            paths.extend(path);
        }
        let n = held.len() as f64;
        let noisy0: Vec<f64> = noisy.iter().map(|x| x[0]).collect();
        let var = |v: &[f64]| mean_sd(v).1.powi(2);
        vector_metrics = Some(VectorMetrics {
            clean_mean: mean_sd(&clean0).0,
            clean_variance: var(&clean0),
            denoised_mean: mean_sd(&den0).0,
            denoised_variance: var(&den0),
            baseline_mean: mean_sd(&base0).0,
            baseline_variance: var(&base0),
            ks_denoised: ks_statistic(&clean0, &den0),
            ks_noisy: ks_statistic(&clean0, &noisy0),
            mse_noisy: se_noisy / n,
            mse_denoised: se_den / n,
        });
    }
    let metrics = MetricsRecord {
        schema: METRICS_SCHEMA.into(),
        run_id: cfg.run_id.clone(),
        config_digest: digest,
        mode: rcfg.mode,
        score_source: rcfg.score_source,
        noise: rcfg.noise,
        posterior_samples: rcfg.posterior_samples,
        reverse_steps: rcfg.steps,
        corruption_time: t_end,
        n_held_out: held.len(),
        quantum: quantum_metrics,
        vector: vector_metrics,
    };
    Ok(EvalOutcome {
        metrics,
        per_state,
        paths,
    })
}

/// Evaluates and writes `metrics.json`, `per_state.jsonl` and
/// `reverse_paths.bin` into `dir`.
pub fn cmd_denoise_eval(cfg: &ExperimentConfig, dir: &Path) -> Result<MetricsRecord> {
    let start = Instant::now();
    let data = DatasetFile::load(&dir.join(DATASET_FILE))?;
    let out = evaluate(cfg, &data, dir)?;
    let mut jsonl = Vec::new();
    for r in &out.per_state {
        serde_json::to_writer(&mut jsonl, r)?;
        writeln!(jsonl)?;
    }
    io::atomic_write(&dir.join(PER_STATE_FILE), &jsonl)?;
    if !out.paths.is_empty() {
        let mut bin = Vec::new();
        write_reverse_paths(&mut bin, &out.paths, data.n_qubits as u32, cfg.reverse_config().seed, &out.metrics.config_digest)?;
        io::atomic_write(&dir.join("reverse_paths.bin"), &bin)?;
    }
    io::write_json(&dir.join(METRICS_FILE), &out.metrics)?;
    io::record_timing(dir, "denoise_eval_seconds", start.elapsed().as_secs_f64())?;
    Ok(out.metrics)
}
