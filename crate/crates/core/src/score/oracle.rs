// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Score sources usable by the reverse-time samplers: the trained network,
//! closed-form Gaussian scores, kernel density estimates and the zero field.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::net::{ScoreNet, Workspace};
use super::ou::OuParams;

/// A (possibly time-dependent) score field `∇_x log p_t(x)`.
pub trait ScoreModel<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// Writes the score at `(x, t)` into `out`.
    fn score_into(&self, x: &[T], t: T, out: &mut [T]) -> Result<()>;

    fn score(&self, x: &[T], t: T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.dim()];
        self.score_into(x, t, &mut out)?;
        Ok(out)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl<T: Real> ScoreModel<T> for ScoreNet<T> {
    fn dim(&self) -> usize {
        self.d_in()
    }

    fn score_into(&self, x: &[T], t: T, out: &mut [T]) -> Result<()> {
        check_len(self.d_in(), x.len())?;
        check_len(self.d_in(), out.len())?;
        let mut ws = Workspace::new(self);
        self.forward_with(x, t, &mut ws, out);
        Ok(())
    }
}

/// The identically zero score.
#[derive(Clone, Copy, Debug)]
pub struct ZeroScore {
    pub dim: usize,
}

impl<T: Real> ScoreModel<T> for ZeroScore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score_into(&self, _x: &[T], _t: T, out: &mut [T]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = T::zero());
        Ok(())
    }
}

/// Exact marginal score of OU-diffused `N(mean, s2·I)` data.
#[derive(Clone, Debug)]
pub struct GaussianScore<T> {
    pub ou: OuParams<T>,
    pub mean: Vec<T>,
    pub variance: T,
}

impl<T: Real> ScoreModel<T> for GaussianScore<T> {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn score_into(&self, x: &[T], t: T, out: &mut [T]) -> Result<()> {
        check_len(self.mean.len(), out.len())?;
        out.copy_from_slice(&self.ou.gaussian_score(x, t, &self.mean, self.variance)?);
        Ok(())
    }
}

/// Score of `(1/M) Σ_i N(x; scale·x_i, var·I)`.
fn mixture_score<T: Real>(points: &[Vec<T>], scale: T, var: T, x: &[T], out: &mut [T]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidInput("kernel density estimate needs at least one point".into()));
    }
    if !(var > T::zero()) {
        return Err(Error::InvalidInput(format!("kernel variance {var} must be positive")));
    }
    let d = x.len();
    check_len(d, out.len())?;
    let mut logw = Vec::with_capacity(points.len());
    for p in points {
        check_len(d, p.len())?;
        let sq: T = p.iter().zip(x).map(|(&a, &b)| (scale * a - b) * (scale * a - b)).sum();
        logw.push(-sq / (T::two() * var));
    }
    let max = logw.iter().copied().fold(T::neg_infinity(), T::max);
    out.iter_mut().for_each(|v| *v = T::zero());
    let mut total = T::zero();
    for (p, lw) in points.iter().zip(&logw) {
        let w = (*lw - max).exp();
        total = total + w;
        for (o, (&a, &b)) in out.iter_mut().zip(p.iter().zip(x)) {
            *o = *o + w * (scale * a - b);
        }
    }
    let norm = total * var;
    out.iter_mut().for_each(|v| *v = *v / norm);
    Ok(())
}

/// Gradient of the log of an isotropic Gaussian kernel density estimate
/// with the given bandwidth, evaluated at `x`.
pub fn kde_score_oracle<T: Real>(ensemble: &[Vec<T>], bandwidth: T, x: &[T]) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); x.len()];
    mixture_score(ensemble, T::one(), bandwidth * bandwidth, x, &mut out)?;
    Ok(out)
}

/// Silverman's rule for a `d`-dimensional isotropic kernel:
/// `σ̂ · (4 / ((d + 2) M))^{1/(d+4)}` with `σ̂` the mean per-coordinate
/// standard deviation.
pub fn silverman_bandwidth<T: Real>(ensemble: &[Vec<T>]) -> Result<T> {
    let m = ensemble.len();
    if m < 2 {
        return Err(Error::InvalidInput("bandwidth selection needs at least two points".into()));
    }
    let d = ensemble[0].len();
    let mf = T::lit(m as f64);
    let mut sd_sum = T::zero();
    for k in 0..d {
        let mean = ensemble.iter().map(|p| p[k]).sum::<T>() / mf;
        let var = ensemble.iter().map(|p| (p[k] - mean) * (p[k] - mean)).sum::<T>() / (mf - T::one());
        sd_sum = sd_sum + var.sqrt();
    }
    let sd = sd_sum / T::lit(d as f64);
    let factor = T::lit(4.0 / ((d as f64 + 2.0) * m as f64)).powf(T::lit(1.0 / (d as f64 + 4.0)));
    Ok(sd * factor)
}

/// Time-dependent KDE score: the clean ensemble smoothed by `bandwidth` and
/// pushed through the OU kernel, i.e. the exact score of
/// `(1/M) Σ_i N(x; m_t x_i, (σ_t² + m_t² h²) I)`. With `h = 0` it is the
/// exact score of the diffused empirical distribution.
#[derive(Clone, Debug)]
pub struct KdeScore<T> {
    pub ou: OuParams<T>,
    pub ensemble: Vec<Vec<T>>,
    pub bandwidth: T,
}

impl<T: Real> ScoreModel<T> for KdeScore<T> {
    fn dim(&self) -> usize {
        self.ensemble.first().map_or(0, |p| p.len())
    }

    fn score_into(&self, x: &[T], t: T, out: &mut [T]) -> Result<()> {
        let (m, var) = self.ou.kernel(t)?;
        mixture_score(&self.ensemble, m, var + m * m * self.bandwidth * self.bandwidth, x, out)
    }
}
