// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Noise channels and the density-matrix master equation (ħ = 1).
//!
//! Each channel rate is folded into its jump operator, `L̃ = √γ L`, so the
//! generator is `−i[H, ρ] + Σ_n (L̃ρL̃† − ½{L̃†L̃, ρ})`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::qstate::{
    anticommutator, pauli, sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z, DensityMatrix,
    Operator, MAX_QUBITS,
};
use crate::scalar::Real;

/// Rates acting on one qubit, in units of inverse time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct QubitNoise<T> {
    /// Depolarization rates along x, y, z.
    pub gamma_d: [T; 3],
    /// Amplitude damping.
    pub gamma_a: T,
    /// Dephasing.
    pub gamma_p: T,
}

impl<T: Real> QubitNoise<T> {
    pub fn zero() -> Self {
        Self {
            gamma_d: [T::zero(); 3],
            gamma_a: T::zero(),
            gamma_p: T::zero(),
        }
    }

    pub fn depolarizing(gamma: T) -> Self {
        Self {
            gamma_d: [gamma; 3],
            ..Self::zero()
        }
    }

    pub fn dephasing(gamma_p: T) -> Self {
        Self {
            gamma_p,
            ..Self::zero()
        }
    }

    pub fn amplitude_damping(gamma_a: T) -> Self {
        Self {
            gamma_a,
            ..Self::zero()
        }
    }

    fn rates(&self) -> [T; 5] {
        [
            self.gamma_d[0],
            self.gamma_d[1],
            self.gamma_d[2],
            self.gamma_a,
            self.gamma_p,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for r in self.rates() {
            if !r.is_finite() || r < T::zero() {
                return Err(Error::InvalidInput(format!(
                    "noise rate {r} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.rates().iter().all(|&r| r == T::zero())
    }
}

/// One scaled jump operator `√γ · L` on the full register.
#[derive(Clone, Debug)]
pub struct JumpOperator<T> {
    pub rate: T,
    pub qubit: usize,
    /// Unscaled `L`, lifted to the register.
    pub operator: Operator<T>,
    /// `√γ · L`.
    pub scaled: Operator<T>,
}

/// Independent per-qubit noise for an `n`-qubit register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "Vec<QubitNoise<T>>", into = "Vec<QubitNoise<T>>")]
pub struct NoiseModel<T> {
    qubits: Vec<QubitNoise<T>>,
}

impl<T: Real> TryFrom<Vec<QubitNoise<T>>> for NoiseModel<T> {
    type Error = Error;
    fn try_from(qubits: Vec<QubitNoise<T>>) -> Result<Self> {
        Self::new(qubits)
    }
}

impl<T: Real> From<NoiseModel<T>> for Vec<QubitNoise<T>> {
    fn from(m: NoiseModel<T>) -> Self {
        m.qubits
    }
}

impl<T: Real> NoiseModel<T> {
    pub fn new(qubits: Vec<QubitNoise<T>>) -> Result<Self> {
        if qubits.is_empty() || qubits.len() > MAX_QUBITS {
            return Err(Error::InvalidInput(format!(
                "noise model must cover 1..={MAX_QUBITS} qubits, got {}",
                qubits.len()
            )));
        }
        for q in &qubits {
            q.validate()?;
        }
        Ok(Self { qubits })
    }

    pub fn single(q: QubitNoise<T>) -> Result<Self> {
        Self::new(vec![q])
    }

    pub fn uniform(n_qubits: usize, q: QubitNoise<T>) -> Result<Self> {
        Self::new(vec![q; n_qubits])
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::uniform(n_qubits, QubitNoise::zero())
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, q: usize) -> &QubitNoise<T> {
        &self.qubits[q]
    }

    pub fn is_zero(&self) -> bool {
        self.qubits.iter().all(QubitNoise::is_zero)
    }

    /// One `(√γ, L)` pair per strictly positive rate, ordered by qubit then
    /// channel (σ_x, σ_y, σ_z depolarization, σ⁻, σ_z dephasing).
    pub fn jump_operators(&self) -> Vec<JumpOperator<T>> {
        let n = self.n_qubits();
        let mut out = Vec::new();
        for (q, noise) in self.qubits.iter().enumerate() {
            let channels = [
                (noise.gamma_d[0], sigma_x()),
                (noise.gamma_d[1], sigma_y()),
                (noise.gamma_d[2], sigma_z()),
                (noise.gamma_a, sigma_minus()),
                (noise.gamma_p, sigma_z::<T>().with_label("Zphase")),
            ];
            for (rate, op) in channels {
                if rate > T::zero() {
                    let lifted = op.on_qubit(q, n);
                    let scaled = lifted.scale_real(rate.sqrt());
                    out.push(JumpOperator {
                        rate,
                        qubit: q,
                        operator: lifted,
                        scaled,
                    });
                }
            }
        }
        out
    }
}

/// One term `coeff · P_0 ⊗ P_1 ⊗ …` of a Pauli-sum Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PauliTerm<T> {
    pub coeff: T,
    /// One letter from `IXYZ` per qubit, qubit 0 first.
    pub paulis: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct HamiltonianSpec<T> {
    n_qubits: usize,
    terms: Vec<PauliTerm<T>>,
}

/// Time-independent Hamiltonian given as a real-weighted Pauli sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "HamiltonianSpec<T>", into = "HamiltonianSpec<T>")]
pub struct Hamiltonian<T> {
    n_qubits: usize,
    terms: Vec<PauliTerm<T>>,
}

impl<T: Real> TryFrom<HamiltonianSpec<T>> for Hamiltonian<T> {
    type Error = Error;
    fn try_from(s: HamiltonianSpec<T>) -> Result<Self> {
        Self::new(s.n_qubits, s.terms)
    }
}

impl<T: Real> From<Hamiltonian<T>> for HamiltonianSpec<T> {
    fn from(h: Hamiltonian<T>) -> Self {
        HamiltonianSpec {
            n_qubits: h.n_qubits,
            terms: h.terms,
        }
    }
}

impl<T: Real> Hamiltonian<T> {
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm<T>>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidInput(format!("unsupported qubit count {n_qubits}")));
        }
        for t in &terms {
            if t.paulis.chars().count() != n_qubits {
                return Err(Error::InvalidInput(format!(
                    "Pauli string {:?} does not have {n_qubits} letters",
                    t.paulis
                )));
            }
            for ch in t.paulis.chars() {
                pauli::<T>(ch)?;
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidInput("non-finite Hamiltonian coefficient".into()));
            }
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, Vec::new())
    }

    /// `Σ_q (ω/2) σ_z^{(q)}`.
    pub fn precession(n_qubits: usize, omega: T) -> Result<Self> {
        let terms = (0..n_qubits)
            .map(|q| PauliTerm {
                coeff: omega * T::half(),
                paulis: (0..n_qubits).map(|k| if k == q { 'Z' } else { 'I' }).collect(),
            })
            .collect();
        Self::new(n_qubits, terms)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm<T>] {
        &self.terms
    }

    pub fn matrix(&self) -> Operator<T> {
        let dim = 1usize << self.n_qubits;
        let mut h = Operator::zeros(dim);
        for t in &self.terms {
            let mut letters = t.paulis.chars();
            let first = letters.next().expect("validated length");
            let mut op = pauli::<T>(first).expect("validated letter");
            for ch in letters {
                op = op.kron(&pauli(ch).expect("validated letter"));
            }
            h.add_scaled(&op, t.coeff);
        }
        h.with_label("H")
    }
}

fn require_single_qubit<T: Real>(rho: &DensityMatrix<T>) -> Result<()> {
    if rho.n_qubits() != 1 {
        return Err(Error::InvalidInput(format!(
            "single-qubit dissipator applied to {} qubits",
            rho.n_qubits()
        )));
    }
    Ok(())
}

fn check_rate<T: Real>(r: T) -> Result<()> {
    if !r.is_finite() || r < T::zero() {
        return Err(Error::InvalidInput(format!("rate {r} must be finite and nonnegative")));
    }
    Ok(())
}

// Channel forms on qubit `q` of an `n`-qubit register.

fn depolarization_on<T: Real>(rho: &Operator<T>, rates: [T; 3], q: usize, n: usize) -> Operator<T> {
    let mut out = Operator::zeros(rho.dim());
    for (rate, s) in rates.into_iter().zip([sigma_x(), sigma_y(), sigma_z()]) {
        if rate == T::zero() {
            continue;
        }
        let s = s.on_qubit(q, n);
        // σρσ − ½{σ², ρ} with σ² = I
        let term = &s.matmul(rho).matmul(&s) - rho;
        out.add_scaled(&term, rate);
    }
    out
}

fn amplitude_on<T: Real>(rho: &Operator<T>, gamma_a: T, q: usize, n: usize) -> Operator<T> {
    if gamma_a == T::zero() {
        return Operator::zeros(rho.dim());
    }
    let lower = sigma_minus::<T>().on_qubit(q, n);
    let raise = sigma_plus::<T>().on_qubit(q, n);
    let number = raise.matmul(&lower);
    let jump = lower.matmul(rho).matmul(&raise);
    let anti = anticommutator(&number, rho).expect("same register");
    let mut out = jump;
    out.add_scaled(&anti, -T::half());
    out.scale_real(gamma_a)
}

fn phase_on<T: Real>(rho: &Operator<T>, gamma_p: T, q: usize, n: usize) -> Operator<T> {
    if gamma_p == T::zero() {
        return Operator::zeros(rho.dim());
    }
    let z = sigma_z::<T>().on_qubit(q, n);
    (&z.matmul(rho).matmul(&z) - rho).scale_real(gamma_p)
}

/// `Σ_k γ_{d,k}(σ_k ρ σ_k − ρ)` on a single qubit.
pub fn dissipator_depolarization<T: Real>(
    rho: &DensityMatrix<T>,
    rates: [T; 3],
) -> Result<Operator<T>> {
    require_single_qubit(rho)?;
    for r in rates {
        check_rate(r)?;
    }
    Ok(depolarization_on(rho.operator(), rates, 0, 1))
}

/// `γ_a(σ⁻ρσ⁺ − ½{σ⁺σ⁻, ρ})` on a single qubit.
pub fn dissipator_amplitude<T: Real>(rho: &DensityMatrix<T>, gamma_a: T) -> Result<Operator<T>> {
    require_single_qubit(rho)?;
    check_rate(gamma_a)?;
    Ok(amplitude_on(rho.operator(), gamma_a, 0, 1))
}

/// `γ_p(σ_z ρ σ_z − ρ)` on a single qubit.
pub fn dissipator_phase<T: Real>(rho: &DensityMatrix<T>, gamma_p: T) -> Result<Operator<T>> {
    require_single_qubit(rho)?;
    check_rate(gamma_p)?;
    Ok(phase_on(rho.operator(), gamma_p, 0, 1))
}

/// Amplitude damping plus dephasing.
pub fn dissipator_relaxation<T: Real>(
    rho: &DensityMatrix<T>,
    gamma_a: T,
    gamma_p: T,
) -> Result<Operator<T>> {
    Ok(&dissipator_amplitude(rho, gamma_a)? + &dissipator_phase(rho, gamma_p)?)
}

fn total_on<T: Real>(rho: &Operator<T>, noise: &NoiseModel<T>) -> Operator<T> {
    let n = noise.n_qubits();
    let mut out = Operator::zeros(rho.dim());
    for q in 0..n {
        let qn = noise.qubit(q);
        out = &out + &depolarization_on(rho, qn.gamma_d, q, n);
        out = &out + &amplitude_on(rho, qn.gamma_a, q, n);
        out = &out + &phase_on(rho, qn.gamma_p, q, n);
    }
    out
}

/// Depolarization plus relaxation on every qubit, each written out in its
/// channel-specific form.
pub fn dissipator_total<T: Real>(rho: &DensityMatrix<T>, noise: &NoiseModel<T>) -> Result<Operator<T>> {
    if rho.n_qubits() != noise.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: noise.n_qubits(),
            found: rho.n_qubits(),
        });
    }
    Ok(total_on(rho.operator(), noise))
}

/// Generic Lindblad sum `Σ_n (L̃ρL̃† − ½{L̃†L̃, ρ})` over scaled jump
/// operators.
pub fn dissipator_jump_form<T: Real>(rho: &Operator<T>, jumps: &[JumpOperator<T>]) -> Operator<T> {
    let mut out = Operator::zeros(rho.dim());
    for j in jumps {
        let l = &j.scaled;
        let ld = l.adjoint();
        let ldl = ld.matmul(l);
        out = &out + &l.matmul(rho).matmul(&ld);
        out.add_scaled(&anticommutator(&ldl, rho).expect("same register"), -T::half());
    }
    out
}

/// `−i[H, ρ] + dissipator_total(ρ)`.
pub fn lindblad_rhs<T: Real>(
    rho: &DensityMatrix<T>,
    h: &Hamiltonian<T>,
    noise: &NoiseModel<T>,
) -> Result<Operator<T>> {
    if h.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: h.n_qubits(),
            found: rho.n_qubits(),
        });
    }
    let hm = h.matrix();
    let comm = crate::qstate::commutator(&hm, rho.operator())?;
    let unitary = comm.scale(-Complex::i());
    Ok(&unitary + &dissipator_total(rho, noise)?)
}

/// Precomputed generator `ρ ↦ Kρ + ρK† + Σ L̃ρL̃†`, `K = −iH − ½ΣL̃†L̃`.
#[derive(Clone, Debug)]
pub struct LindbladGenerator<T> {
    effective: Operator<T>,
    effective_adj: Operator<T>,
    jumps: Vec<(Operator<T>, Operator<T>)>,
}

impl<T: Real> LindbladGenerator<T> {
    pub fn new(h: &Hamiltonian<T>, noise: &NoiseModel<T>) -> Result<Self> {
        if h.n_qubits() != noise.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: h.n_qubits(),
                found: noise.n_qubits(),
            });
        }
        let mut effective = h.matrix().scale(-Complex::i());
        let mut jumps = Vec::new();
        for j in noise.jump_operators() {
            let ld = j.scaled.adjoint();
            effective.add_scaled(&ld.matmul(&j.scaled), -T::half());
            jumps.push((j.scaled, ld));
        }
        let effective_adj = effective.adjoint();
        Ok(Self {
            effective,
            effective_adj,
            jumps,
        })
    }

    pub fn apply(&self, rho: &Operator<T>) -> Operator<T> {
        let mut out = &self.effective.matmul(rho) + &rho.matmul(&self.effective_adj);
        for (l, ld) in &self.jumps {
            out = &out + &l.matmul(rho).matmul(ld);
        }
        out
    }
}

/// Output of [`integrate_master`]: the state after every step.
#[derive(Clone, Debug)]
pub struct MasterSolution<T> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    pub step_size: T,
}

impl<T: Real> MasterSolution<T> {
    pub fn final_state(&self) -> &DensityMatrix<T> {
        self.states.last().expect("solution has at least the initial state")
    }

    /// State at the grid point closest to `t`.
    pub fn state_near(&self, t: T) -> &DensityMatrix<T> {
        let k = (t / self.step_size).round().to_usize().unwrap_or(0);
        &self.states[k.min(self.states.len() - 1)]
    }

    /// CSV with a `time` column followed by row-major `(re, im)` entries.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.states[0].dim();
        write!(w, "time")?;
        for i in 0..dim {
            for j in 0..dim {
                write!(w, ",rho{i}{j}_re,rho{i}{j}_im")?;
            }
        }
        writeln!(w)?;
        for (t, rho) in self.times.iter().zip(&self.states) {
            write!(w, "{}", t.as_f64())?;
            for z in rho.operator().as_slice() {
                write!(w, ",{},{}", z.re.as_f64(), z.im.as_f64())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Classical fourth-order Runge–Kutta on the master equation.
///
/// The step count is `round(t_end / dt)`, and the actual step is adjusted so
/// the grid ends exactly at `t_end`. Every stored state is re-Hermitized and
/// trace-renormalized.
pub fn integrate_master<T: Real>(
    rho0: &DensityMatrix<T>,
    h: &Hamiltonian<T>,
    noise: &NoiseModel<T>,
    t_end: T,
    dt: T,
) -> Result<MasterSolution<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("step size {dt} must be positive")));
    }
    if !(t_end >= T::zero()) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("end time {t_end} must be nonnegative")));
    }
    if dt >= t_end {
        return Err(Error::InvalidInput(format!(
            "step size {dt} must be smaller than the horizon {t_end}"
        )));
    }
    rho0.check_physical(T::lit(crate::qstate::PSD_TOL))?;
    if rho0.n_qubits() != noise.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: noise.n_qubits(),
            found: rho0.n_qubits(),
        });
    }
    let gen = LindbladGenerator::new(h, noise)?;
    let steps = (t_end / dt).round().to_usize().unwrap_or(1).max(1);
    let step = t_end / T::lit(steps as f64);
    let half = step * T::half();
    let sixth = step / T::lit(6.0);

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(T::zero());
    states.push(rho0.clone());
    let mut rho = rho0.operator().clone();
    for k in 1..=steps {
        let k1 = gen.apply(&rho);
        let mut tmp = rho.clone();
        tmp.add_scaled(&k1, half);
        let k2 = gen.apply(&tmp);
        let mut tmp = rho.clone();
        tmp.add_scaled(&k2, half);
        let k3 = gen.apply(&tmp);
        let mut tmp = rho.clone();
        tmp.add_scaled(&k3, step);
        let k4 = gen.apply(&tmp);

        rho.add_scaled(&k1, sixth);
        rho.add_scaled(&k2, sixth * T::two());
        rho.add_scaled(&k3, sixth * T::two());
        rho.add_scaled(&k4, sixth);
        if !rho.is_finite() {
            return Err(Error::NonFinite {
                step: k,
                channel: None,
                context: "master equation state".into(),
            });
        }
        let next = DensityMatrix::from_operator_unchecked(rho)?.renormalized()?;
        rho = next.operator().clone();
        times.push(T::lit(k as f64) * step);
        states.push(next);
    }
    Ok(MasterSolution {
        times,
        states,
        step_size: step,
    })
}

/// Closed-form single-qubit decay laws used as integrator oracles.
pub mod analytic {
    use crate::scalar::Real;

    /// `|ρ₀₁(t)| / |ρ₀₁(0)|` under dephasing.
    pub fn dephasing_coherence<T: Real>(gamma_p: T, t: T) -> T {
        (-T::two() * gamma_p * t).exp()
    }

    /// `|r(t)| / |r(0)|` under equal-rate depolarization.
    pub fn depolarizing_bloch<T: Real>(gamma: T, t: T) -> T {
        (-T::lit(4.0) * gamma * t).exp()
    }

    /// `ρ₁₁(t) / ρ₁₁(0)` under amplitude damping.
    pub fn excited_population<T: Real>(gamma_a: T, t: T) -> T {
        (-gamma_a * t).exp()
    }

    /// `|ρ₀₁(t)| / |ρ₀₁(0)|` under amplitude damping plus dephasing.
    pub fn relaxation_coherence<T: Real>(gamma_a: T, gamma_p: T, t: T) -> T {
        (-(gamma_a * T::half() + T::two() * gamma_p) * t).exp()
    }
}
