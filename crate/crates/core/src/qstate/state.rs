// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest register this toolkit supports.
pub const MAX_QUBITS: usize = 3;
/// Tolerance for the normalization invariant.
pub const NORM_TOL: f64 = 1e-10;

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "state length {len} is not 2^n for n >= 1"
        )));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::InvalidInput(format!(
            "{n} qubits exceeds the supported maximum of {MAX_QUBITS}"
        )));
    }
    Ok(n)
}

/// Complex amplitude vector of an `n`-qubit register, `1 ≤ n ≤ 3`.
///
/// The `normalized` flag records whether the amplitudes are a physical state;
/// when it is set the 2-norm is within [`NORM_TOL`] of one. Unnormalized
/// vectors arise from the linear stochastic unraveling.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    amps: Vec<Complex<T>>,
    n_qubits: usize,
    normalized: bool,
}

impl<T: Real> StateVector<T> {
    /// Wraps amplitudes, checking the length and, if `normalized` is set, the
    /// norm.
    pub fn new(amps: Vec<Complex<T>>, normalized: bool) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        let s = Self {
            amps,
            n_qubits,
            normalized,
        };
        if normalized {
            let norm = s.norm().as_f64();
            if !((norm - 1.0).abs() <= NORM_TOL) {
                return Err(Error::NotNormalized { norm });
            }
        }
        Ok(s)
    }

    /// Wraps amplitudes without any normalization claim.
    pub fn unnormalized(amps: Vec<Complex<T>>) -> Result<Self> {
        Self::new(amps, false)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidInput(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex::zero(); dim];
        amps[index] = Complex::one();
        Self::new(amps, true)
    }

    /// Normalizes arbitrary nonzero amplitudes into a physical state.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        Self::unnormalized(amps)?.normalize()
    }

    /// Haar-random pure state: normalized complex Gaussian vector.
    pub fn haar_random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let amps = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(T::lit(re), T::lit(im))
            })
            .collect();
        Self::from_amplitudes(amps)
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm. Fails for a zero or non-finite vector.
    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cannot normalize a vector of norm {norm}"
            )));
        }
        let inv = norm.recip();
        Ok(Self {
            amps: self.amps.iter().map(|z| z.scale(inv)).collect(),
            n_qubits: self.n_qubits,
            normalized: true,
        })
    }

    /// Inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(&a, &b)| a.conj() * b)
            .sum())
    }

    /// Multiplies every amplitude by `k`. The result carries no
    /// normalization claim unless `|k| = 1` exactly preserves it.
    pub fn scaled(&self, k: Complex<T>) -> Self {
        Self {
            amps: self.amps.iter().map(|&z| z * k).collect(),
            n_qubits: self.n_qubits,
            normalized: false,
        }
    }

    /// Multiplies by the global phase `e^{iθ}`; normalization is kept.
    pub fn with_global_phase(&self, theta: T) -> Self {
        let mut s = self.scaled(Complex::cis(theta));
        s.normalized = self.normalized;
        s
    }

    /// Representative with the first amplitude real and nonnegative, i.e. the
    /// Bloch-sphere form `(cos θ/2, e^{iφ} sin θ/2)` for one qubit. Leaves the
    /// state untouched if that amplitude is zero.
    pub fn canonical_phase(&self) -> Self {
        let a0 = self.amps[0];
        if a0.abs() == T::zero() {
            return self.clone();
        }
        let mut s = self.with_global_phase(-a0.arg());
        s.amps[0] = Complex::from_real(a0.abs());
        s
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.is_finite())
    }

    /// Real parts followed by imaginary parts.
    pub fn embed(&self) -> RealEmbedding<T> {
        let mut coords = Vec::with_capacity(2 * self.dim());
        coords.extend(self.amps.iter().map(|z| z.re));
        coords.extend(self.amps.iter().map(|z| z.im));
        RealEmbedding(coords)
    }

    /// Inverse of [`Self::embed`]. The normalization flag is set when the
    /// vector has unit norm within [`NORM_TOL`].
    pub fn from_embedding(x: &RealEmbedding<T>) -> Result<Self> {
        let len = x.0.len();
        if len % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "embedding length {len} is odd"
            )));
        }
        let half = len / 2;
        let amps = (0..half)
            .map(|k| Complex::new(x.0[k], x.0[k + half]))
            .collect();
        let mut s = Self::unnormalized(amps)?;
        s.normalized = (s.norm().as_f64() - 1.0).abs() <= NORM_TOL;
        Ok(s)
    }
}

/// Real-vector view of a state vector: `(Re ψ, Im ψ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "T: Real")]
pub struct RealEmbedding<T>(pub Vec<T>);

impl<T: Real> RealEmbedding<T> {
    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|&x| x * x).sum::<T>().sqrt()
    }
}

/// `embed` as a free function.
pub fn real_embed<T: Real>(psi: &StateVector<T>) -> RealEmbedding<T> {
    psi.embed()
}

/// `from_embedding` as a free function.
pub fn real_unembed<T: Real>(x: &RealEmbedding<T>) -> Result<StateVector<T>> {
    StateVector::from_embedding(x)
}

// State vectors serialize as a JSON array of `[re, im]` pairs.
impl<T: Real> Serialize for StateVector<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.amps.serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for StateVector<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let amps = Vec::<Complex<T>>::deserialize(deserializer)?;
        let mut s = Self::unnormalized(amps).map_err(serde::de::Error::custom)?;
        s.normalized = (s.norm().as_f64() - 1.0).abs() <= NORM_TOL;
        Ok(s)
    }
}
