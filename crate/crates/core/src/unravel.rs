// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Linear stochastic unraveling of the master equation on state vectors:
//!
//! ```text
//! dψ = [−iH − ½ Σ_n L̃_n†L̃_n] ψ dt + Σ_n i L̃_n ψ dW_n,     L̃_n = √γ_n L_n
//! ```
//!
//! with one independent real Wiener process per jump operator. The average
//! of the unnormalized projectors `|ψ⟩⟨ψ|` solves the master equation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::lindblad::{Hamiltonian, MasterSolution, NoiseModel};
use crate::qstate::{operator_norm, trace_distance, DensityMatrix, Operator, StateVector};
use crate::rng::{CounterNormal, WienerIncrements};
use crate::scalar::Real;
use crate::trajfile::{self, Direction, PathHeader, PathRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    EulerMaruyama,
    PlatenSrk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SdeConfig<T> {
    pub t_end: T,
    pub dt: T,
    pub integrator: Integrator,
    pub seed: u64,
    pub renormalize_each_step: bool,
}

impl<T: Real> SdeConfig<T> {
    pub fn new(t_end: T, dt: T, integrator: Integrator, seed: u64) -> Self {
        Self {
            t_end,
            dt,
            integrator,
            seed,
            renormalize_each_step: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(Error::InvalidInput(format!("t_end {} must be positive", self.t_end)));
        }
        if !(self.dt > T::zero()) || self.dt > self.t_end {
            return Err(Error::InvalidInput(format!(
                "dt {} must lie in (0, t_end = {}]",
                self.dt, self.t_end
            )));
        }
        Ok(())
    }

    /// `round(t_end / dt)`, at least one.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().unwrap_or(1).max(1)
    }

    /// Step actually taken so that the grid ends at `t_end`.
    pub fn step_size(&self) -> T {
        self.t_end / T::lit(self.steps() as f64)
    }
}

/// The forward SDE for a fixed Hamiltonian and noise model. Both drift and
/// diffusion are linear and time independent, so their operators are
/// assembled once.
#[derive(Clone, Debug)]
pub struct ForwardSde<T> {
    n_qubits: usize,
    drift_op: Operator<T>,
    diffusion_ops: Vec<Operator<T>>,
}

impl<T: Real> ForwardSde<T> {
    pub fn new(h: &Hamiltonian<T>, noise: &NoiseModel<T>) -> Result<Self> {
        if h.n_qubits() != noise.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: h.n_qubits(),
                found: noise.n_qubits(),
            });
        }
        let mut drift_op = h.matrix().scale(-Complex::i());
        let mut diffusion_ops = Vec::new();
        for j in noise.jump_operators() {
            drift_op.add_scaled(&j.scaled.adjoint().matmul(&j.scaled), -T::half());
            diffusion_ops.push(j.scaled.scale(Complex::i()));
        }
        Ok(Self {
            n_qubits: h.n_qubits(),
            drift_op,
            diffusion_ops,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Number of independent Wiener processes (one per jump operator).
    pub fn n_channels(&self) -> usize {
        self.diffusion_ops.len()
    }

    /// `−iH − ½ Σ L̃†L̃`.
    pub fn drift_operator(&self) -> &Operator<T> {
        &self.drift_op
    }

    /// `i L̃_n` per channel.
    pub fn diffusion_operators(&self) -> &[Operator<T>] {
        &self.diffusion_ops
    }

    pub fn drift(&self, psi: &[Complex<T>]) -> Vec<Complex<T>> {
        self.drift_op.apply(psi)
    }

    pub fn diffusion_columns(&self, psi: &[Complex<T>]) -> Vec<Vec<Complex<T>>> {
        self.diffusion_ops.iter().map(|g| g.apply(psi)).collect()
    }

    fn check_increments(&self, dw: &[T]) {
        assert_eq!(dw.len(), self.n_channels(), "one increment per channel");
    }

    /// `ψ + f dt + Σ_n g_n ΔW_n`.
    pub fn em_step(&self, psi: &[Complex<T>], dt: T, dw: &[T]) -> Vec<Complex<T>> {
        self.check_increments(dw);
        let f = self.drift(psi);
        let mut out: Vec<Complex<T>> = psi.iter().zip(&f).map(|(&p, &d)| p + d.scale(dt)).collect();
        for (g, &w) in self.diffusion_ops.iter().zip(dw) {
            let col = g.apply(psi);
            for (o, c) in out.iter_mut().zip(col) {
                *o += c.scale(w);
            }
        }
        out
    }

    /// Explicit strong order 1.0 scheme of Platen with supporting values
    /// `Υ_j = ψ + f dt + g_j √dt` and a Heun drift:
    ///
    /// ```text
    /// ψ' = ψ + ½[f(ψ) + f(ψ + f dt)] dt + Σ_j g_j ΔW_j
    ///        + (1/√dt) Σ_{j1,j2} [g_{j2}(Υ_{j1}) − g_{j2}(ψ)] I_(j1,j2)
    /// ```
    ///
    /// with `I_(j,j) = (ΔW_j² − dt)/2` and the commutative-noise closure
    /// `I_(j1,j2) = ΔW_j1 ΔW_j2 / 2` for `j1 ≠ j2`. Strong order one holds
    /// when the jump operators commute (always true for a single channel);
    /// otherwise the off-diagonal closure limits it to order one half.
    pub fn platen_step(&self, psi: &[Complex<T>], dt: T, dw: &[T]) -> Vec<Complex<T>> {
        self.check_increments(dw);
        let mut out = self.em_step(psi, dt, dw);
        // Heun correction of the drift: adds ½ dt² A f.
        let f = self.drift(psi);
        let predictor: Vec<Complex<T>> = psi.iter().zip(&f).map(|(&p, &d)| p + d.scale(dt)).collect();
        for ((o, fp), fb) in out.iter_mut().zip(self.drift(&predictor)).zip(&f) {
            *o += (fp - *fb).scale(dt * T::half());
        }
        let m = self.n_channels();
        if m == 0 {
            return out;
        }
        let sqrt_dt = dt.sqrt();
        let base = self.diffusion_columns(psi);
        let inv = sqrt_dt.recip();
        for j1 in 0..m {
            let support: Vec<Complex<T>> = psi
                .iter()
                .zip(&f)
                .zip(&base[j1])
                .map(|((&p, &d), &g)| p + d.scale(dt) + g.scale(sqrt_dt))
                .collect();
            for j2 in 0..m {
                let iterated = if j1 == j2 {
                    (dw[j1] * dw[j1] - dt) * T::half()
                } else {
                    dw[j1] * dw[j2] * T::half()
                };
                let coef = iterated * inv;
                let g_support = self.diffusion_ops[j2].apply(&support);
                for ((o, gs), gb) in out.iter_mut().zip(&g_support).zip(&base[j2]) {
                    *o += (*gs - *gb).scale(coef);
                }
            }
        }
        out
    }

    pub fn step(&self, integrator: Integrator, psi: &[Complex<T>], dt: T, dw: &[T]) -> Vec<Complex<T>> {
        match integrator {
            Integrator::EulerMaruyama => self.em_step(psi, dt, dw),
            Integrator::PlatenSrk => self.platen_step(psi, dt, dw),
        }
    }

    /// Finite-difference and exact bounds on the drift Jacobian and on the
    /// diffusion coefficients. Both are linear in ψ and time independent, so
    /// the Lipschitz constants are operator norms and `∂_t g = 0`.
    pub fn lipschitz_bounds(&self) -> LipschitzReport<T> {
        let dim = self.dim();
        let eps = T::lit(1e-6);
        let fd = |op: &Operator<T>| {
            let psi: Vec<Complex<T>> = (0..dim)
                .map(|k| Complex::new(T::lit(0.3 + 0.1 * k as f64), T::lit(-0.2 * k as f64)))
                .collect();
            let base = op.apply(&psi);
            let mut best = T::zero();
            for k in 0..dim {
                for dir in [Complex::one(), Complex::i()] {
                    let mut p = psi.clone();
                    p[k] += dir.scale(eps);
                    let moved = op.apply(&p);
                    let diff = moved
                        .iter()
                        .zip(&base)
                        .map(|(&a, &b)| (a - b).norm_sqr())
                        .sum::<T>()
                        .sqrt()
                        / eps;
                    best = best.max(diff);
                }
            }
            best
        };
        LipschitzReport {
            drift_norm: operator_norm(&self.drift_op),
            drift_fd: fd(&self.drift_op),
            diffusion_norms: self.diffusion_ops.iter().map(operator_norm).collect(),
            diffusion_fd: self.diffusion_ops.iter().map(fd).collect(),
            time_derivative: T::zero(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LipschitzReport<T> {
    /// `‖∇_ψ f‖` as an operator norm.
    pub drift_norm: T,
    /// Largest finite-difference slope of `f` along coordinate directions.
    pub drift_fd: T,
    pub diffusion_norms: Vec<T>,
    pub diffusion_fd: Vec<T>,
    /// `|∂_t g|`; zero for time-independent coefficients.
    pub time_derivative: T,
}

impl<T: Real> LipschitzReport<T> {
    pub fn is_finite(&self) -> bool {
        self.drift_norm.is_finite()
            && self.drift_fd.is_finite()
            && self.diffusion_norms.iter().all(|x| x.is_finite())
            && self.diffusion_fd.iter().all(|x| x.is_finite())
            && self.time_derivative.is_finite()
    }
}

/// `f(ψ) = −iHψ − ½ Σ L̃†L̃ψ`.
pub fn drift<T: Real>(
    psi: &StateVector<T>,
    h: &Hamiltonian<T>,
    noise: &NoiseModel<T>,
) -> Result<Vec<Complex<T>>> {
    let sde = ForwardSde::new(h, noise)?;
    check_dim(&sde, psi)?;
    Ok(sde.drift(psi.amplitudes()))
}

/// One column `i√γ_n L_n ψ` per jump operator.
pub fn diffusion_columns<T: Real>(
    psi: &StateVector<T>,
    noise: &NoiseModel<T>,
) -> Result<Vec<Vec<Complex<T>>>> {
    let sde = ForwardSde::new(&Hamiltonian::zero(noise.n_qubits())?, noise)?;
    check_dim(&sde, psi)?;
    Ok(sde.diffusion_columns(psi.amplitudes()))
}

fn check_dim<T: Real>(sde: &ForwardSde<T>, psi: &StateVector<T>) -> Result<()> {
    if psi.dim() != sde.dim() {
        return Err(Error::DimensionMismatch {
            expected: sde.dim(),
            found: psi.dim(),
        });
    }
    Ok(())
}

/// A single path on the step grid. `norms[k]` is the 2-norm of the raw
/// state before any renormalization.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub id: u64,
    pub times: Vec<T>,
    pub states: Vec<StateVector<T>>,
    pub norms: Vec<T>,
}

fn nonfinite_channel<T: Real>(sde: &ForwardSde<T>, psi: &[Complex<T>]) -> Option<usize> {
    sde.diffusion_columns(psi)
        .iter()
        .position(|c| c.iter().any(|z| !z.is_finite()))
}

/// Integrates the forward SDE, keeping every `record_every`-th grid point
/// plus the final one.
pub fn simulate_recorded<T: Real>(
    sde: &ForwardSde<T>,
    psi0: &StateVector<T>,
    config: &SdeConfig<T>,
    trajectory_id: u64,
    record_every: usize,
) -> Result<Trajectory<T>> {
    config.validate()?;
    check_dim(sde, psi0)?;
    let norm0 = psi0.norm().as_f64();
    if (norm0 - 1.0).abs() > crate::qstate::NORM_TOL {
        return Err(Error::NotNormalized { norm: norm0 });
    }
    let record_every = record_every.max(1);
    let steps = config.steps();
    let dt = config.step_size();
    let source = CounterNormal::new(config.seed);

    let mut times = vec![T::zero()];
    let mut states = vec![psi0.clone()];
    let mut norms = vec![psi0.norm()];
    let mut psi = psi0.amplitudes().to_vec();
    for k in 0..steps {
        let dw = WienerIncrements::generate(&source, trajectory_id, k as u64, sde.n_channels(), dt);
        let next = sde.step(config.integrator, &psi, dt, &dw.values);
        if next.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite {
                step: k + 1,
                channel: nonfinite_channel(sde, &psi),
                context: format!(
                    "trajectory {trajectory_id} produced a non-finite amplitude; dt = {dt} is likely too large"
                ),
            });
        }
        let raw = StateVector::unnormalized(next)?;
        let norm = raw.norm();
        let state = if config.renormalize_each_step {
            raw.normalize()?
        } else {
            raw
        };
        psi = state.amplitudes().to_vec();
        let step_no = k + 1;
        if step_no % record_every == 0 || step_no == steps {
            times.push(T::lit(step_no as f64) * dt);
            states.push(state);
            norms.push(norm);
        }
    }
    Ok(Trajectory {
        id: trajectory_id,
        times,
        states,
        norms,
    })
}

/// Full path of one trajectory on the step grid.
pub fn simulate_trajectory<T: Real>(
    sde: &ForwardSde<T>,
    psi0: &StateVector<T>,
    config: &SdeConfig<T>,
    trajectory_id: u64,
) -> Result<Trajectory<T>> {
    simulate_recorded(sde, psi0, config, trajectory_id, 1)
}

/// Trajectories sharing one configuration and recording grid.
#[derive(Clone, Debug)]
pub struct Ensemble<T> {
    pub trajectories: Vec<Trajectory<T>>,
    pub config: SdeConfig<T>,
    pub noise: NoiseModel<T>,
    pub hamiltonian: Hamiltonian<T>,
    pub record_every: usize,
}

/// Simulates trajectories `0..n_trajectories` in parallel. The result is
/// independent of thread count: every path depends only on its id.
pub fn simulate_ensemble<T: Real>(
    psi0: &StateVector<T>,
    hamiltonian: &Hamiltonian<T>,
    noise: &NoiseModel<T>,
    config: &SdeConfig<T>,
    n_trajectories: usize,
    record_every: usize,
) -> Result<Ensemble<T>> {
    if n_trajectories == 0 {
        return Err(Error::InvalidInput("ensemble needs at least one trajectory".into()));
    }
    let sde = ForwardSde::new(hamiltonian, noise)?;
    let trajectories = (0..n_trajectories as u64)
        .into_par_iter()
        .map(|id| simulate_recorded(&sde, psi0, config, id, record_every))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        trajectories,
        config: config.clone(),
        noise: noise.clone(),
        hamiltonian: hamiltonian.clone(),
        record_every: record_every.max(1),
    })
}

impl<T: Real> Ensemble<T> {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.trajectories[0].times
    }

    /// Mean raw norm at each recorded point.
    pub fn mean_norms(&self) -> Vec<T> {
        let n = T::lit(self.len() as f64);
        (0..self.times().len())
            .map(|k| self.trajectories.iter().map(|t| t.norms[k]).sum::<T>() / n)
            .collect()
    }

    pub fn density(&self, t_index: usize) -> Result<DensityMatrix<T>> {
        ensemble_density(self, t_index)
    }

    pub fn write_binary<W: Write>(&self, w: W, digest_hex: &str) -> Result<()> {
        let dim = self.trajectories[0].states[0].dim();
        let header = PathHeader {
            direction: Direction::Forward,
            n_qubits: self.noise.n_qubits() as u32,
            width: (2 * dim) as u32,
            n_paths: self.len() as u64,
            n_points: self.times().len() as u64,
            seed: self.config.seed,
            digest: trajfile::digest_bytes(digest_hex),
        };
        let paths: Vec<PathRecord> = self.trajectories.iter().map(trajectory_record).collect();
        trajfile::write_paths(w, &header, &paths)
    }

    /// CSV with `time, mean_norm, trace_distance_to_oracle`; the last column
    /// is empty without an oracle solution.
    pub fn write_summary_csv<W: Write>(&self, mut w: W, oracle: Option<&MasterSolution<T>>) -> Result<()> {
        writeln!(w, "time,mean_norm,trace_distance_to_oracle")?;
        let norms = self.mean_norms();
        for (k, (&t, &norm)) in self.times().iter().zip(&norms).enumerate() {
            let dist = match oracle {
                Some(sol) => {
                    let d = trace_distance(&self.density(k)?, sol.state_near(t))?;
                    format!("{}", d.as_f64())
                }
                None => String::new(),
            };
            writeln!(w, "{},{},{}", t.as_f64(), norm.as_f64(), dist)?;
        }
        Ok(())
    }
}

pub(crate) fn trajectory_record<T: Real>(t: &Trajectory<T>) -> PathRecord {
    PathRecord {
        id: t.id,
        times: t.times.iter().map(|x| x.as_f64()).collect(),
        values: t
            .states
            .iter()
            .flat_map(|s| s.amplitudes().iter().flat_map(|z| [z.re.as_f64(), z.im.as_f64()]))
            .collect(),
        norms: t.norms.iter().map(|x| x.as_f64()).collect(),
    }
}

/// `(1/N) Σ |ψ̃_i⟩⟨ψ̃_i|` over the unnormalized states at `t_index`,
/// summed in trajectory order and then trace-normalized.
pub fn ensemble_density<T: Real>(ens: &Ensemble<T>, t_index: usize) -> Result<DensityMatrix<T>> {
    let n_points = ens.times().len();
    if t_index >= n_points {
        return Err(Error::InvalidInput(format!(
            "time index {t_index} out of range ({n_points} points)"
        )));
    }
    let dim = ens.trajectories[0].states[0].dim();
    let mut acc = Operator::zeros(dim);
    for traj in &ens.trajectories {
        let v = traj.states[t_index].amplitudes();
        for i in 0..dim {
            for j in 0..dim {
                acc[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    let scaled = acc.scale_real(T::one() / T::lit(ens.len() as f64));
    DensityMatrix::from_operator_unchecked(scaled)?.renormalized()
}
