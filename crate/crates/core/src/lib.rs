// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Open-quantum-system noise as stochastic differential equations, and
//! score-based reverse-time denoising of the resulting states.
//!
//! The numeric core is generic over a [`Real`] scalar (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the pipeline and
//! all quoted tolerances use.

pub mod complex;
pub mod error;
pub mod lindblad;
pub mod pipeline;
pub mod qstate;
pub mod reverse;
pub mod rng;
pub mod scalar;
pub mod score;
pub mod stats;
pub mod trajfile;
pub mod unravel;

pub use complex::Complex;
pub use error::{Error, Result};
pub use scalar::Real;

pub type Complex64 = Complex<f64>;
pub type Operator64 = qstate::Operator<f64>;
pub type StateVector64 = qstate::StateVector<f64>;
pub type DensityMatrix64 = qstate::DensityMatrix<f64>;
pub type RealEmbedding64 = qstate::RealEmbedding<f64>;
pub type NoiseModel64 = lindblad::NoiseModel<f64>;
pub type QubitNoise64 = lindblad::QubitNoise<f64>;
pub type Hamiltonian64 = lindblad::Hamiltonian<f64>;
