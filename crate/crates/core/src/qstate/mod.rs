// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Quantum-state primitives: dense operators, state vectors, density
//! matrices, distance measures and the real-vector embedding of states.

mod density;
pub mod eigen;
mod metrics;
mod operator;
mod state;

pub use density::{DensityMatrix, HERMITIAN_TOL, PSD_TOL, TRACE_TOL};
pub use eigen::{hermitian_eigenvalues, operator_norm, principal_eigenvector, trace_norm};
pub use metrics::{bloch_vector, fidelity_pure, trace_distance};
pub use operator::{
    anticommutator, commutator, pauli, sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z,
    Operator,
};
pub use state::{real_embed, real_unembed, RealEmbedding, StateVector, MAX_QUBITS, NORM_TOL};
