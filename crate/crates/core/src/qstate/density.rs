// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::eigen::hermitian_eigenvalues;
use super::state::{StateVector, MAX_QUBITS, NORM_TOL};
use super::Operator;
use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

/// Physical density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    op: Operator<T>,
    n_qubits: usize,
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() || dim.trailing_zeros() as usize > MAX_QUBITS {
        return Err(Error::InvalidInput(format!(
            "dimension {dim} is not 2^n with 1 <= n <= {MAX_QUBITS}"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

impl<T: Real> DensityMatrix<T> {
    /// Validates `op` against the density-matrix invariants.
    pub fn new(op: Operator<T>) -> Result<Self> {
        let rho = Self::from_operator_unchecked(op)?;
        rho.check_physical(T::lit(PSD_TOL))?;
        Ok(rho)
    }

    /// Wraps an operator of valid dimension without checking physicality.
    pub fn from_operator_unchecked(op: Operator<T>) -> Result<Self> {
        let n_qubits = qubits_for_dim(op.dim())?;
        Ok(Self { op, n_qubits })
    }

    /// `|ψ⟩⟨ψ|` for a unit-norm state.
    pub fn pure(psi: &StateVector<T>) -> Result<Self> {
        let norm = psi.norm().as_f64();
        if !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self::projector_unchecked(psi.amplitudes()))
    }

    /// `|v⟩⟨v|` with no normalization requirement.
    pub(crate) fn projector_unchecked(v: &[Complex<T>]) -> Self {
        let n = v.len();
        let mut op = Operator::zeros(n);
        for i in 0..n {
            for j in 0..n {
                op[(i, j)] = v[i] * v[j].conj();
            }
        }
        Self {
            op,
            n_qubits: n.trailing_zeros() as usize,
        }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        qubits_for_dim(dim)?;
        Ok(Self {
            op: Operator::identity(dim).scale_real(T::one() / T::lit(dim as f64)),
            n_qubits,
        })
    }

    #[inline]
    pub fn operator(&self) -> &Operator<T> {
        &self.op
    }

    pub fn into_operator(self) -> Operator<T> {
        self.op
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> Complex<T> {
        self.op.trace()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> T {
        // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
        self.op.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.op)
    }

    /// Checks Hermiticity, unit trace and eigenvalues `≥ −psd_tol`.
    pub fn check_physical(&self, psd_tol: T) -> Result<()> {
        if !self.op.is_finite() {
            return Err(Error::NonPhysical("non-finite entries".into()));
        }
        if !self.op.is_hermitian(T::lit(HERMITIAN_TOL)) {
            return Err(Error::NonPhysical("not Hermitian".into()));
        }
        let tr = self.trace();
        if (tr.re - T::one()).abs() > T::lit(TRACE_TOL) || tr.im.abs() > T::lit(TRACE_TOL) {
            return Err(Error::NonPhysical(format!("trace {tr} != 1")));
        }
        let min = self.eigenvalues()[0];
        if min < -psd_tol {
            return Err(Error::NonPhysical(format!("negative eigenvalue {min}")));
        }
        Ok(())
    }

    /// Re-Hermitizes and rescales to unit trace.
    pub fn renormalized(&self) -> Result<Self> {
        let herm = self.op.hermitian_part();
        let tr = herm.trace().re;
        if !(tr > T::zero()) || !tr.is_finite() {
            return Err(Error::NonPhysical(format!("trace {tr} cannot be normalized")));
        }
        Ok(Self {
            op: herm.scale_real(tr.recip()),
            n_qubits: self.n_qubits,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct DensityJson<T> {
    n: usize,
    entries: Vec<Complex<T>>,
}

// Density matrices serialize as `{"n": qubits, "entries": [[re, im], ...]}`
// with row-major entries.
impl<T: Real> Serialize for DensityMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DensityJson {
            n: self.n_qubits,
            entries: self.op.as_slice().to_vec(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for DensityMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = DensityJson::<T>::deserialize(deserializer)?;
        let op = Operator::from_row_major(raw.entries).map_err(serde::de::Error::custom)?;
        let rho = Self::from_operator_unchecked(op).map_err(serde::de::Error::custom)?;
        if rho.n_qubits != raw.n {
            return Err(serde::de::Error::custom(format!(
                "n = {} does not match {} entries",
                raw.n,
                rho.dim() * rho.dim()
            )));
        }
        Ok(rho)
    }
}
