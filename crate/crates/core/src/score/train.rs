// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Denoising score matching: datasets, configuration and the training loop.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::RealEmbedding;
use crate::scalar::Real;

use super::net::{ScoreNet, TrainSample};
use super::ou::OuParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    HaarStates,
    TrajectoryEndpoints,
    ToyGaussian,
}

/// Clean samples `x_0` drawn from the data distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScoreDataset<T> {
    pub provenance: Provenance,
    pub samples: Vec<RealEmbedding<T>>,
}

impl<T: Real> ScoreDataset<T> {
    pub fn new(provenance: Provenance, samples: Vec<RealEmbedding<T>>) -> Result<Self> {
        let ds = Self { provenance, samples };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.samples.first() else {
            return Err(Error::InvalidInput("dataset is empty".into()));
        };
        let d = first.0.len();
        if d == 0 {
            return Err(Error::InvalidInput("dataset samples have zero dimension".into()));
        }
        for (k, s) in self.samples.iter().enumerate() {
            if s.0.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.0.len(),
                });
            }
            if s.0.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("dataset sample {k} is not finite")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.0.len())
    }

    /// Samples as plain vectors, e.g. for a kernel density estimate.
    pub fn points(&self) -> Vec<Vec<T>> {
        self.samples.iter().map(|s| s.0.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `λ(t) = σ_t²`.
    Sigma2,
    /// `λ(t) = 1`.
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    PlainSgd,
    AdaptiveMoments,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct TrainConfig<T> {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: T,
    pub seed: u64,
    pub weighting: Weighting,
    pub optimizer: OptimizerKind,
    pub hidden: usize,
    /// Lower cutoff of the sampled diffusion times.
    pub t_min: T,
    /// Decay of the exponential moving average reported as smoothed loss.
    pub smoothing: T,
    /// Decay of the parameter moving average returned as the trained
    /// network; zero returns the last iterate.
    pub weight_ema: T,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            steps: 5000,
            batch_size: 128,
            learning_rate: T::lit(1e-3),
            seed: 0,
            weighting: Weighting::Sigma2,
            optimizer: OptimizerKind::AdaptiveMoments,
            hidden: 128,
            t_min: T::lit(1e-3),
            smoothing: T::lit(0.99),
            weight_ema: T::lit(0.999),
        }
    }
}

impl<T: Real> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::InvalidInput("batch size and hidden width must be positive".into()));
        }
        if !(self.learning_rate > T::zero()) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(self.t_min > T::zero()) {
            return Err(Error::InvalidInput(format!("t_min {} must be positive", self.t_min)));
        }
        for (name, v) in [("smoothing", self.smoothing), ("weight_ema", self.weight_ema)] {
            if !(v >= T::zero() && v < T::one()) {
                return Err(Error::InvalidInput(format!("{name} = {v} must lie in [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Raw per-step batch loss and its bias-corrected moving average.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossCurve<T> {
    pub raw: Vec<T>,
    pub smoothed: Vec<T>,
}

impl<T: Real> LossCurve<T> {
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn final_smoothed(&self) -> Option<T> {
        self.smoothed.last().copied()
    }

    /// `step,raw_loss,smoothed_loss`, one row per step.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,raw_loss,smoothed_loss")?;
        for (k, (r, s)) in self.raw.iter().zip(&self.smoothed).enumerate() {
            writeln!(w, "{},{},{}", k + 1, r.as_f64(), s.as_f64())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub net: ScoreNet<T>,
    pub curve: LossCurve<T>,
}

/// Samples per gradient chunk. Chunks are reduced in a fixed order, so the
/// result does not depend on the number of worker threads.
const CHUNK: usize = 16;

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Adam<T> {
    fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [T], grad: &[T], lr: T) {
        let (b1, b2, eps) = (T::lit(0.9), T::lit(0.999), T::lit(1e-8));
        self.t += 1;
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            *p = *p - lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

fn draw_batch<T: Real>(
    rng: &mut ChaCha8Rng,
    data: &ScoreDataset<T>,
    ou: &OuParams<T>,
    cfg: &TrainConfig<T>,
) -> Result<Vec<TrainSample<T>>> {
    let d = data.dim();
    let (lo, hi) = (cfg.t_min.as_f64(), ou.t_end.as_f64());
    (0..cfg.batch_size)
        .map(|_| {
            let x0 = &data.samples[rng.random_range(0..data.len())].0;
            let t = T::lit(lo + (hi - lo) * rng.random::<f64>());
            let (m, var) = ou.kernel(t)?;
            let sd = var.sqrt();
            let mut x = Vec::with_capacity(d);
            let mut target = Vec::with_capacity(d);
            for &a in x0 {
                let xi = T::lit(rng.sample::<f64, _>(StandardNormal));
                x.push(m * a + sd * xi);
                target.push(-xi / sd);
            }
            let weight = match cfg.weighting {
                Weighting::Sigma2 => var,
                Weighting::One => T::one(),
            };
            Ok(TrainSample { x, t, target, weight })
        })
        .collect()
}

fn batch_gradient<T: Real>(net: &ScoreNet<T>, batch: &[TrainSample<T>]) -> Result<(T, Vec<T>)> {
    let denom = T::lit(batch.len() as f64);
    let parts = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = vec![T::zero(); net.n_params()];
            let loss = net.accumulate_batch(chunk, denom, &mut g)?;
            Ok((loss, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); net.n_params()];
    for (l, g) in parts {
        loss = loss + l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a = *a + b;
        }
    }
    Ok((loss, grad))
}

/// Trains `net` by denoising score matching against the OU kernel with
/// `t ~ U(t_min, T)`. Deterministic for fixed inputs regardless of thread
/// count.
pub fn train<T: Real>(
    mut net: ScoreNet<T>,
    data: &ScoreDataset<T>,
    ou: &OuParams<T>,
    cfg: &TrainConfig<T>,
) -> Result<TrainOutcome<T>> {
    data.validate()?;
    ou.validate()?;
    cfg.validate()?;
    if data.dim() != net.d_in() {
        return Err(Error::DimensionMismatch {
            expected: net.d_in(),
            found: data.dim(),
        });
    }
    if cfg.t_min >= ou.t_end {
        return Err(Error::InvalidInput(format!(
            "t_min {} must be below the horizon {}",
            cfg.t_min, ou.t_end
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(net.n_params());
    let mut curve = LossCurve {
        raw: Vec::with_capacity(cfg.steps),
        smoothed: Vec::with_capacity(cfg.steps),
    };
    let mut ema = T::zero();
    let mut averaged = vec![T::zero(); net.n_params()];
    for step in 0..cfg.steps {
        let batch = draw_batch(&mut rng, data, ou, cfg)?;
        let (loss, grad) = batch_gradient(&net, &batch)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingDiverged {
                step,
                loss: loss.as_f64(),
            });
        }
        match cfg.optimizer {
            OptimizerKind::AdaptiveMoments => adam.step(net.params_mut(), &grad, cfg.learning_rate),
            OptimizerKind::PlainSgd => {
                for (p, g) in net.params_mut().iter_mut().zip(&grad) {
                    *p = *p - cfg.learning_rate * *g;
                }
            }
        }
        if !net.is_finite() {
            return Err(Error::TrainingDiverged {
                step,
                loss: loss.as_f64(),
            });
        }
        for (a, &p) in averaged.iter_mut().zip(net.params()) {
            *a = cfg.weight_ema * *a + (T::one() - cfg.weight_ema) * p;
        }
        ema = cfg.smoothing * ema + (T::one() - cfg.smoothing) * loss;
        let correction = T::one() - cfg.smoothing.powi(step as i32 + 1);
        curve.raw.push(loss);
        curve.smoothed.push(if correction > T::zero() { ema / correction } else { loss });
    }
    if cfg.steps > 0 && cfg.weight_ema > T::zero() {
        // Bias-corrected so that early stopping does not shrink the weights.
        let correction = T::one() - cfg.weight_ema.powi(cfg.steps.min(i32::MAX as usize) as i32);
        for (p, a) in net.params_mut().iter_mut().zip(&averaged) {
            *p = *a / correction;
        }
    }
    Ok(TrainOutcome { net, curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> ScoreDataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        ScoreDataset::new(
            Provenance::ToyGaussian,
            (0..n).map(|_| RealEmbedding(vec![rng.sample(StandardNormal)])).collect(),
        )
        .unwrap()
    }

    fn quick_cfg() -> TrainConfig<f64> {
        TrainConfig {
            steps: 150,
            batch_size: 32,
            hidden: 16,
            seed: 9,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn dataset_validation() {
        assert!(ScoreDataset::<f64>::new(Provenance::ToyGaussian, vec![]).is_err());
        assert!(ScoreDataset::new(
            Provenance::ToyGaussian,
            vec![RealEmbedding(vec![1.0]), RealEmbedding(vec![1.0, 2.0])]
        )
        .is_err());
        assert!(ScoreDataset::new(Provenance::ToyGaussian, vec![RealEmbedding(vec![f64::NAN])]).is_err());
    }

    #[test]
    fn initial_loss_is_target_variance_and_training_reduces_it() {
        let data = toy(500);
        let ou = OuParams::default();
        let cfg = quick_cfg();
        let net = ScoreNet::new(1, cfg.hidden, ou.t_end, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let out = train(net, &data, &ou, &cfg).unwrap();
        assert_eq!(out.curve.len(), cfg.steps);
        // λ = σ² and a zero net give loss = mean ξ², i.e. about one per dimension.
        assert!((out.curve.raw[0] - 1.0).abs() < 0.4, "{}", out.curve.raw[0]);
        assert!(out.curve.final_smoothed().unwrap() < out.curve.smoothed[0]);
        let mut csv = Vec::new();
        out.curve.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), cfg.steps + 1);
    }

    #[test]
    fn training_is_bitwise_deterministic_across_thread_counts() {
        let data = toy(200);
        let ou = OuParams::default();
        let cfg = quick_cfg();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let net = ScoreNet::new(1, cfg.hidden, ou.t_end, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
                train(net, &data, &ou, &cfg).unwrap().net
            })
        };
        assert_eq!(run(1).params(), run(4).params());
    }

    #[test]
    fn divergence_is_reported() {
        let data = toy(50);
        let ou = OuParams::default();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            optimizer: OptimizerKind::PlainSgd,
            ..quick_cfg()
        };
        let net = ScoreNet::new(1, cfg.hidden, ou.t_end, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(matches!(train(net, &data, &ou, &cfg), Err(Error::TrainingDiverged { .. })));
    }
}
