// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Ornstein–Uhlenbeck forward process `dX = −αX dt + √2 β dW`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OuParams<T> {
    pub alpha: T,
    pub beta: T,
    /// Diffusion horizon `T`.
    pub t_end: T,
}

impl<T: Real> Default for OuParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            beta: T::one(),
            t_end: T::one(),
        }
    }
}

impl<T: Real> OuParams<T> {
    pub fn new(alpha: T, beta: T, t_end: T) -> Result<Self> {
        let p = Self { alpha, beta, t_end };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("t_end", self.t_end)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("OU parameter {name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// `β²/α`, the variance of the Gaussian prior.
    pub fn stationary_variance(&self) -> T {
        self.beta * self.beta / self.alpha
    }

    /// `(m_t, σ_t²) = (e^{−αt}, (β²/α)(1 − e^{−2αt}))`.
    pub fn kernel(&self, t: T) -> Result<(T, T)> {
        if !(t >= T::zero()) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("OU time {t} must be non-negative")));
        }
        let m = (-self.alpha * t).exp();
        let var = self.stationary_variance() * -(-T::two() * self.alpha * t).exp_m1();
        Ok((m, var))
    }

    /// Exact draw of `x_t | x_0`.
    pub fn sample_forward<R: Rng + ?Sized>(&self, x0: &[T], t: T, rng: &mut R) -> Result<Vec<T>> {
        let (m, var) = self.kernel(t)?;
        let sd = var.sqrt();
        Ok(x0
            .iter()
            .map(|&x| {
                let xi: f64 = rng.sample(StandardNormal);
                m * x + sd * T::lit(xi)
            })
            .collect())
    }

    /// `−(x_t − m_t x_0)/σ_t²`, the score of the transition kernel.
    pub fn conditional_score(&self, xt: &[T], x0: &[T], t: T) -> Result<Vec<T>> {
        if xt.len() != x0.len() {
            return Err(Error::DimensionMismatch {
                expected: x0.len(),
                found: xt.len(),
            });
        }
        let (m, var) = self.kernel(t)?;
        if !(var > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "conditional score is undefined at t = {t} (zero kernel variance)"
            )));
        }
        Ok(xt.iter().zip(x0).map(|(&a, &b)| -(a - m * b) / var).collect())
    }

    /// Marginal score when the data are `N(mean, s2·I)`:
    /// `−(x − m_t·mean)/(m_t² s2 + σ_t²)`.
    pub fn gaussian_score(&self, x: &[T], t: T, mean: &[T], s2: T) -> Result<Vec<T>> {
        if x.len() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: x.len(),
            });
        }
        let (m, var) = self.kernel(t)?;
        let total = m * m * s2 + var;
        if !(total > T::zero()) {
            return Err(Error::InvalidInput("degenerate Gaussian marginal".into()));
        }
        Ok(x.iter().zip(mean).map(|(&a, &mu)| -(a - m * mu) / total).collect())
    }
}

/// Free-function form of [`OuParams::kernel`].
pub fn ou_kernel<T: Real>(params: &OuParams<T>, t: T) -> Result<(T, T)> {
    params.kernel(t)
}
