// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Reverse-time integration with a score field.
//!
//! Every sampler runs a forward loop on the reversed clock `s ∈ [0, T − t_min]`
//! with physical time `t = T − s`, so step sizes are always positive.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::qstate::eigen::{symmetric_eigen, JACOBI_MAX_SWEEPS, JACOBI_TOL};
use crate::qstate::{principal_eigenvector, Operator, RealEmbedding, StateVector};
use crate::rng::CounterNormal;
use crate::scalar::Real;
use crate::score::{OuParams, ScoreModel};
use crate::trajfile::{self, Direction, PathHeader, PathRecord};
use crate::unravel::ForwardSde;

/// Embedding norm above which a reverse path is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreSource {
    Network,
    KdeOracle,
    Analytic,
    /// The zero field; reverse OU then reduces to a pure drift.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReverseMode {
    Ou,
    QuantumLiteral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseScale {
    Stochastic,
    DriftOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct ReverseConfig<T> {
    pub steps: usize,
    pub score_source: ScoreSource,
    pub mode: ReverseMode,
    pub noise: NoiseScale,
    pub seed: u64,
    /// Stop time; the reverse clock ends at `s = T − t_min`.
    pub t_min: T,
    /// Reverse paths drawn per quantum state. The state estimate is the
    /// principal eigenvector of the mean projector over these paths.
    pub posterior_samples: usize,
}

impl<T: Real> Default for ReverseConfig<T> {
    fn default() -> Self {
        Self {
            steps: 100,
            score_source: ScoreSource::Network,
            mode: ReverseMode::Ou,
            noise: NoiseScale::Stochastic,
            seed: 0,
            t_min: T::lit(1e-3),
            posterior_samples: 1,
        }
    }
}

impl<T: Real> ReverseConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidInput("reverse integration needs at least one step".into()));
        }
        if self.posterior_samples == 0 {
            return Err(Error::InvalidInput("posterior_samples must be at least one".into()));
        }
        if !(self.t_min >= T::zero()) {
            return Err(Error::InvalidInput(format!("t_min {} must be non-negative", self.t_min)));
        }
        Ok(())
    }

    /// Reverse-clock step size for horizon `t_end`, or `None` when the
    /// horizon does not exceed `t_min`.
    pub fn step_size(&self, t_end: T) -> Option<T> {
        let span = t_end - self.t_min;
        (span > T::zero()).then(|| span / T::lit(self.steps as f64))
    }
}

fn check_finite<T: Real>(v: &[T], step: usize, what: &str) -> Result<()> {
    if let Some(k) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            step,
            channel: Some(k),
            context: format!("{what} returned a non-finite component"),
        });
    }
    Ok(())
}

/// One reverse OU step on the reversed clock:
///
/// ```text
/// x' = x + [α x + 2β² score(x, T − s)] ds + √(2 ds) β ξ
/// ```
///
/// `xi = None` drops the noise term.
pub fn reverse_ou_step<T: Real>(
    x: &[T],
    s: T,
    ds: T,
    ou: &OuParams<T>,
    score: &dyn ScoreModel<T>,
    xi: Option<&[T]>,
) -> Result<Vec<T>> {
    let t = ou.t_end - s;
    let sc = score.score(x, t)?;
    check_finite(&sc, 0, "score")?;
    let two_b2 = T::two() * ou.beta * ou.beta;
    let mut out: Vec<T> = x
        .iter()
        .zip(&sc)
        .map(|(&xv, &sv)| xv + (ou.alpha * xv + two_b2 * sv) * ds)
        .collect();
    if let Some(xi) = xi {
        if xi.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: xi.len(),
            });
        }
        let amp = (T::two() * ds).sqrt() * ou.beta;
        for (o, &z) in out.iter_mut().zip(xi) {
            *o = *o + amp * z;
        }
    }
    Ok(out)
}

/// Euler–Maruyama step of the general backward SDE with scalar diffusion
/// `g(t)`, on the reversed clock with `t = t_end − s`:
///
/// ```text
/// x' = x − [f(x, t) − g(t)² score(x, t)] ds + g(t) √ds ξ
/// ```
#[allow(clippy::too_many_arguments)]
pub fn reverse_general_step<T: Real>(
    x: &[T],
    s: T,
    ds: T,
    t_end: T,
    f: &dyn Fn(&[T], T) -> Vec<T>,
    g: &dyn Fn(T) -> T,
    score: &dyn ScoreModel<T>,
    xi: Option<&[T]>,
) -> Result<Vec<T>> {
    let t = t_end - s;
    let fx = f(x, t);
    let gt = g(t);
    let sc = score.score(x, t)?;
    check_finite(&sc, 0, "score")?;
    let mut out: Vec<T> = x
        .iter()
        .zip(fx.iter().zip(&sc))
        .map(|(&xv, (&fv, &sv))| xv - (fv - gt * gt * sv) * ds)
        .collect();
    if let Some(xi) = xi {
        let amp = gt * ds.sqrt();
        for (o, &z) in out.iter_mut().zip(xi) {
            *o = *o + amp * z;
        }
    }
    Ok(out)
}

/// `D = G Gᵀ` where the columns of `G` are the real embeddings of the
/// per-channel diffusion vectors `i√γ_n L_n ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionMatrix<T> {
    dim: usize,
    /// Row-major `dim × dim`.
    data: Vec<T>,
    /// Column `n` of `G`, embedded.
    columns: Vec<Vec<T>>,
}

fn embed_slice<T: Real>(v: &[Complex<T>]) -> Vec<T> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

impl<T: Real> DiffusionMatrix<T> {
    pub fn at_state(sde: &ForwardSde<T>, psi: &[Complex<T>]) -> Self {
        let columns: Vec<Vec<T>> = sde.diffusion_columns(psi).iter().map(|c| embed_slice(c)).collect();
        Self::from_columns(2 * psi.len(), columns)
    }

    pub fn from_columns(dim: usize, columns: Vec<Vec<T>>) -> Self {
        let mut data = vec![T::zero(); dim * dim];
        for c in &columns {
            for i in 0..dim {
                for j in 0..dim {
                    data[i * dim + j] = data[i * dim + j] + c[i] * c[j];
                }
            }
        }
        Self { dim, data, columns }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.data[i * self.dim + j] * v[j]).sum())
            .collect()
    }

    /// `G ξ` with one entry of `xi` per channel.
    pub fn apply_sqrt(&self, xi: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (c, &z) in self.columns.iter().zip(xi) {
            for (o, &v) in out.iter_mut().zip(c) {
                *o = *o + v * z;
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| (self.entry(i, j) - self.entry(j, i)).abs() <= tol))
    }

    /// Smallest eigenvalue of `D`.
    pub fn min_eigenvalue(&self) -> T {
        let eig = symmetric_eigen(&self.data, self.dim, T::lit(JACOBI_TOL), JACOBI_MAX_SWEEPS);
        eig.values.first().copied().unwrap_or_else(T::zero)
    }
}

/// One step of the state-dependent reverse SDE in the real embedding, with
/// `G` frozen at the current state:
///
/// ```text
/// x' = x − [f_emb(x) − D score(x, T − s)] ds + G ξ √ds
/// ```
///
/// The result is unembedded and renormalized; the raw norm is returned
/// alongside for diagnostics.
pub fn quantum_reverse_step<T: Real>(
    psi: &StateVector<T>,
    s: T,
    ds: T,
    t_end: T,
    sde: &ForwardSde<T>,
    score: &dyn ScoreModel<T>,
    xi: Option<&[T]>,
) -> Result<(StateVector<T>, T)> {
    let amps = psi.amplitudes();
    let x = embed_slice(amps);
    let f = embed_slice(&sde.drift(amps));
    let dm = DiffusionMatrix::at_state(sde, amps);
    let sc = score.score(&x, t_end - s)?;
    check_finite(&sc, 0, "score")?;
    let dsc = dm.apply(&sc);
    let mut out: Vec<T> = x
        .iter()
        .zip(f.iter().zip(&dsc))
        .map(|(&xv, (&fv, &dv))| xv - (fv - dv) * ds)
        .collect();
    if let Some(xi) = xi {
        if xi.len() != sde.n_channels() {
            return Err(Error::DimensionMismatch {
                expected: sde.n_channels(),
                found: xi.len(),
            });
        }
        let noise = dm.apply_sqrt(xi);
        let sq = ds.sqrt();
        for (o, &n) in out.iter_mut().zip(&noise) {
            *o = *o + n * sq;
        }
    }
    let raw = StateVector::from_embedding(&RealEmbedding(out))?;
    let norm = raw.norm();
    if !norm.is_finite() || norm == T::zero() {
        return Err(Error::NonFinite {
            step: 0,
            channel: None,
            context: format!("reverse quantum step produced norm {norm}"),
        });
    }
    Ok((raw.normalize()?, norm))
}

/// Reverse path of one denoising run; `values` holds one row per recorded
/// point.
#[derive(Clone, Debug, PartialEq)]
pub struct ReversePath<T> {
    pub id: u64,
    /// Reversed-clock times `s`.
    pub times: Vec<T>,
    pub values: Vec<Vec<T>>,
    pub norms: Vec<T>,
}

impl<T: Real> ReversePath<T> {
    pub fn to_record(&self) -> PathRecord {
        PathRecord {
            id: self.id,
            times: self.times.iter().map(|t| t.as_f64()).collect(),
            values: self.values.iter().flatten().map(|v| v.as_f64()).collect(),
            norms: self.norms.iter().map(|v| v.as_f64()).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DenoiseResult<T> {
    pub estimate: Vec<T>,
    pub path: ReversePath<T>,
}

fn norm2<T: Real>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Noise for step `step` of path `id`, sample `sample`; coordinates are the
/// counter channels.
fn step_noise<T: Real>(src: &CounterNormal, id: u64, sample: usize, step: usize, dim: usize) -> Vec<T> {
    let base = (sample * dim) as u64;
    (0..dim)
        .map(|c| T::lit(src.standard_normal(id, step as u64, base + c as u64)))
        .collect()
}

fn reverse_ou_run<T: Real>(
    x_t: &[T],
    cfg: &ReverseConfig<T>,
    ou: &OuParams<T>,
    score: &dyn ScoreModel<T>,
    id: u64,
    sample: usize,
    record: bool,
) -> Result<DenoiseResult<T>> {
    cfg.validate()?;
    let mut path = ReversePath {
        id,
        times: vec![T::zero()],
        values: vec![x_t.to_vec()],
        norms: vec![norm2(x_t)],
    };
    let Some(ds) = cfg.step_size(ou.t_end) else {
        return Ok(DenoiseResult {
            estimate: x_t.to_vec(),
            path,
        });
    };
    let src = CounterNormal::new(cfg.seed);
    let mut x = x_t.to_vec();
    for k in 0..cfg.steps {
        let s = T::lit(k as f64) * ds;
        let xi = match cfg.noise {
            NoiseScale::Stochastic => Some(step_noise::<T>(&src, id, sample, k, x.len())),
            NoiseScale::DriftOnly => None,
        };
        x = reverse_ou_step(&x, s, ds, ou, score, xi.as_deref()).map_err(|e| at_step(e, k + 1))?;
        let n = norm2(&x);
        if !(n.as_f64() <= DIVERGENCE_LIMIT) {
            return Err(Error::Divergence {
                step: k + 1,
                norm: n.as_f64(),
                limit: DIVERGENCE_LIMIT,
            });
        }
        if record {
            path.times.push(s + ds);
            path.values.push(x.clone());
            path.norms.push(n);
        }
    }
    Ok(DenoiseResult { estimate: x, path })
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::NonFinite { channel, context, .. } => Error::NonFinite { step, channel, context },
        other => other,
    }
}

/// Integrates the reverse OU SDE from `x_T` (reversed clock `s = 0`) to
/// `s = T − t_min` and returns the terminal estimate with the full path.
/// When `T ≤ t_min` the input is returned unchanged.
pub fn denoise<T: Real>(
    x_t: &[T],
    cfg: &ReverseConfig<T>,
    ou: &OuParams<T>,
    score: &dyn ScoreModel<T>,
    path_id: u64,
) -> Result<DenoiseResult<T>> {
    reverse_ou_run(x_t, cfg, ou, score, path_id, 0, true)
}

/// Denoises many inputs in parallel; path `i` uses counter stream
/// `first_id + i`, so results do not depend on scheduling.
pub fn denoise_batch<T: Real>(
    inputs: &[Vec<T>],
    cfg: &ReverseConfig<T>,
    ou: &OuParams<T>,
    score: &dyn ScoreModel<T>,
    first_id: u64,
) -> Result<Vec<DenoiseResult<T>>> {
    inputs
        .par_iter()
        .enumerate()
        .map(|(i, x)| denoise(x, cfg, ou, score, first_id + i as u64))
        .collect()
}

/// Mean projector of normalized states; the returned principal eigenvector
/// is the pure state closest to that mixture.
pub fn principal_state<T: Real>(states: &[Vec<Complex<T>>]) -> Result<StateVector<T>> {
    let Some(first) = states.first() else {
        return Err(Error::InvalidInput("no states to combine".into()));
    };
    let dim = first.len();
    let mut acc = Operator::zeros(dim);
    for v in states {
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<T>();
        if !(nrm > T::zero()) {
            continue;
        }
        for i in 0..dim {
            for j in 0..dim {
                acc[(i, j)] += (v[i] * v[j].conj()).scale(T::one() / nrm);
            }
        }
    }
    let (_, vec) = principal_eigenvector(&acc);
    StateVector::from_amplitudes(vec).map(|s| s.canonical_phase())
}

/// Denoises one corrupted embedding of a quantum state with the reverse OU
/// sampler. With `posterior_samples = K > 1`, K independent reverse paths
/// are combined through [`principal_state`].
pub fn denoise_state<T: Real>(
    x_t: &RealEmbedding<T>,
    cfg: &ReverseConfig<T>,
    ou: &OuParams<T>,
    score: &dyn ScoreModel<T>,
    path_id: u64,
) -> Result<StateVector<T>> {
    let samples = if cfg.noise == NoiseScale::DriftOnly { 1 } else { cfg.posterior_samples };
    let mut terminal = Vec::with_capacity(samples);
    for k in 0..samples {
        let run = reverse_ou_run(&x_t.0, cfg, ou, score, path_id, k, false)?;
        let psi = StateVector::from_embedding(&RealEmbedding(run.estimate))?;
        terminal.push(psi.into_amplitudes());
    }
    principal_state(&terminal)
}

/// Quantum-literal denoising: reverse steps of the state-dependent SDE from
/// `psi_t`, renormalized every step.
pub fn denoise_quantum<T: Real>(
    psi_t: &StateVector<T>,
    cfg: &ReverseConfig<T>,
    t_end: T,
    sde: &ForwardSde<T>,
    score: &dyn ScoreModel<T>,
    path_id: u64,
) -> Result<(StateVector<T>, ReversePath<T>)> {
    cfg.validate()?;
    let psi0 = psi_t.normalize()?;
    let mut path = ReversePath {
        id: path_id,
        times: vec![T::zero()],
        values: vec![psi0.embed().0],
        norms: vec![psi_t.norm()],
    };
    let span = t_end - cfg.t_min;
    if !(span > T::zero()) {
        return Ok((psi0, path));
    }
    let ds = span / T::lit(cfg.steps as f64);
    let src = CounterNormal::new(cfg.seed);
    let mut psi = psi0;
    for k in 0..cfg.steps {
        let s = T::lit(k as f64) * ds;
        let xi = match cfg.noise {
            NoiseScale::Stochastic => Some(step_noise::<T>(&src, path_id, 0, k, sde.n_channels())),
            NoiseScale::DriftOnly => None,
        };
        let (next, raw) = quantum_reverse_step(&psi, s, ds, t_end, sde, score, xi.as_deref())
            .map_err(|e| at_step(e, k + 1))?;
        if !(raw.as_f64() <= DIVERGENCE_LIMIT) {
            return Err(Error::Divergence {
                step: k + 1,
                norm: raw.as_f64(),
                limit: DIVERGENCE_LIMIT,
            });
        }
        path.times.push(s + ds);
        path.values.push(next.embed().0);
        path.norms.push(raw);
        psi = next;
    }
    Ok((psi, path))
}

/// Writes reverse paths in the shared binary path format.
pub fn write_reverse_paths<T: Real, W: std::io::Write>(
    w: W,
    paths: &[ReversePath<T>],
    n_qubits: u32,
    seed: u64,
    digest_hex: &str,
) -> Result<()> {
    let Some(first) = paths.first() else {
        return Err(Error::InvalidInput("no reverse paths to write".into()));
    };
    let header = PathHeader {
        direction: Direction::Reverse,
        n_qubits,
        width: first.values.first().map_or(0, |v| v.len()) as u32,
        n_paths: paths.len() as u64,
        n_points: first.times.len() as u64,
        seed,
        digest: trajfile::digest_bytes(digest_hex),
    };
    let records: Vec<PathRecord> = paths.iter().map(|p| p.to_record()).collect();
    trajfile::write_paths(w, &header, &records)
}
