// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

use super::eigen::trace_norm;
use super::operator::{sigma_x, sigma_y, sigma_z};
use super::{DensityMatrix, StateVector, NORM_TOL};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn require_normalized<T: Real>(psi: &StateVector<T>) -> Result<()> {
    let norm = psi.norm().as_f64();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// `|⟨ψ|φ⟩|²` for unit-norm states. Symmetric and global-phase invariant.
pub fn fidelity_pure<T: Real>(psi: &StateVector<T>, phi: &StateVector<T>) -> Result<T> {
    if psi.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: phi.dim(),
        });
    }
    require_normalized(psi)?;
    require_normalized(phi)?;
    Ok(psi.inner(phi)?.norm_sqr().min(T::one()))
}

/// `½ Σ |λ_k(ρ − σ)|`.
pub fn trace_distance<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let diff = rho.operator() - sigma.operator();
    Ok((trace_norm(&diff) * T::half()).min(T::one()))
}

/// `(tr ρσ_x, tr ρσ_y, tr ρσ_z)` for a single qubit.
pub fn bloch_vector<T: Real>(rho: &DensityMatrix<T>) -> Result<[T; 3]> {
    if rho.n_qubits() != 1 {
        return Err(Error::InvalidInput(format!(
            "Bloch vector needs one qubit, got {}",
            rho.n_qubits()
        )));
    }
    let op = rho.operator();
    let comp = |p: super::Operator<T>| op.matmul(&p).trace().re;
    Ok([comp(sigma_x()), comp(sigma_y()), comp(sigma_z())])
}
