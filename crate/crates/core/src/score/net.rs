// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two-hidden-layer tanh perceptron `s_θ(x, t)` with hand-written
//! reverse-mode gradients.
//!
//! Parameters live in one flat vector laid out as
//! `W1 (h × (d+4)), b1 (h), W2 (h × h), b2 (h), W3 (d × h), b3 (d)`, with
//! weight matrices row-major.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of time features fed to the first layer.
pub const D_TIME: usize = 4;

/// `[t/T, sin 2πt/T, cos 2πt/T, sin 4πt/T]`.
pub fn time_features<T: Real>(t: T, t_scale: T) -> [T; D_TIME] {
    let u = t / t_scale;
    let w = T::TAU() * u;
    [u, w.sin(), w.cos(), (w + w).sin()]
}

/// One training example with its loss weight `λ(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample<T> {
    pub x: Vec<T>,
    pub t: T,
    pub target: Vec<T>,
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreNet<T> {
    d_in: usize,
    hidden: usize,
    t_scale: T,
    params: Vec<T>,
}

#[derive(Clone, Copy, Debug)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    end: usize,
}

fn layout(d_in: usize, hidden: usize) -> Layout {
    let d0 = d_in + D_TIME;
    let w1 = 0;
    let b1 = w1 + hidden * d0;
    let w2 = b1 + hidden;
    let b2 = w2 + hidden * hidden;
    let w3 = b2 + hidden;
    let b3 = w3 + d_in * hidden;
    Layout {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
        end: b3 + d_in,
    }
}

/// Scratch buffers for one forward/backward pass.
#[derive(Clone, Debug)]
pub struct Workspace<T> {
    z0: Vec<T>,
    h1: Vec<T>,
    h2: Vec<T>,
    out: Vec<T>,
    d_out: Vec<T>,
    d2: Vec<T>,
    d1: Vec<T>,
}

impl<T: Real> Workspace<T> {
    pub fn new(net: &ScoreNet<T>) -> Self {
        let (d, h) = (net.d_in, net.hidden);
        Self {
            z0: vec![T::zero(); d + D_TIME],
            h1: vec![T::zero(); h],
            h2: vec![T::zero(); h],
            out: vec![T::zero(); d],
            d_out: vec![T::zero(); d],
            d2: vec![T::zero(); h],
            d1: vec![T::zero(); h],
        }
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

impl<T: Real> ScoreNet<T> {
    /// Gaussian hidden weights with standard deviation `1/√fan_in`, zero
    /// biases and a zero output layer, so the untrained net outputs zero.
    pub fn new<R: Rng + ?Sized>(d_in: usize, hidden: usize, t_scale: T, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(d_in, hidden, t_scale)?;
        let lay = layout(d_in, hidden);
        let s1 = T::one() / T::lit((d_in + D_TIME) as f64).sqrt();
        let s2 = T::one() / T::lit(hidden as f64).sqrt();
        for w in &mut net.params[lay.w1..lay.b1] {
            *w = T::lit(rng.sample::<f64, _>(StandardNormal)) * s1;
        }
        for w in &mut net.params[lay.w2..lay.b2] {
            *w = T::lit(rng.sample::<f64, _>(StandardNormal)) * s2;
        }
        Ok(net)
    }

    pub fn zeros(d_in: usize, hidden: usize, t_scale: T) -> Result<Self> {
        if d_in == 0 || hidden == 0 {
            return Err(Error::InvalidInput("network widths must be positive".into()));
        }
        if !(t_scale > T::zero()) {
            return Err(Error::InvalidInput(format!("time scale {t_scale} must be positive")));
        }
        Ok(Self {
            d_in,
            hidden,
            t_scale,
            params: vec![T::zero(); layout(d_in, hidden).end],
        })
    }

    pub fn from_params(d_in: usize, hidden: usize, t_scale: T, params: Vec<T>) -> Result<Self> {
        let mut net = Self::zeros(d_in, hidden, t_scale)?;
        if params.len() != net.params.len() {
            return Err(Error::DimensionMismatch {
                expected: net.params.len(),
                found: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn t_scale(&self) -> T {
        self.t_scale
    }

    /// Layer widths `[d+4, h, h, d]`.
    pub fn widths(&self) -> [usize; 4] {
        [self.d_in + D_TIME, self.hidden, self.hidden, self.d_in]
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: self.d_in,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn forward_ws(&self, x: &[T], t: T, ws: &mut Workspace<T>) {
        let (d, h) = (self.d_in, self.hidden);
        let d0 = d + D_TIME;
        let lay = layout(d, h);
        let p = &self.params;
        ws.z0[..d].copy_from_slice(x);
        ws.z0[d..].copy_from_slice(&time_features(t, self.t_scale));
        for k in 0..h {
            let row = &p[lay.w1 + k * d0..lay.w1 + (k + 1) * d0];
            ws.h1[k] = (dot(row, &ws.z0) + p[lay.b1 + k]).tanh();
        }
        for j in 0..h {
            let row = &p[lay.w2 + j * h..lay.w2 + (j + 1) * h];
            ws.h2[j] = (dot(row, &ws.h1) + p[lay.b2 + j]).tanh();
        }
        for o in 0..d {
            let row = &p[lay.w3 + o * h..lay.w3 + (o + 1) * h];
            ws.out[o] = dot(row, &ws.h2) + p[lay.b3 + o];
        }
    }

    /// Evaluates `s_θ(x, t)`.
    pub fn forward(&self, x: &[T], t: T) -> Result<Vec<T>> {
        self.check_input(x)?;
        let mut ws = Workspace::new(self);
        self.forward_ws(x, t, &mut ws);
        Ok(ws.out)
    }

    /// Allocation-free evaluation for hot loops; `out` must have length `d`.
    pub fn forward_with(&self, x: &[T], t: T, ws: &mut Workspace<T>, out: &mut [T]) {
        self.forward_ws(x, t, ws);
        out.copy_from_slice(&ws.out);
    }

    /// Adds the gradient of `scale · weight · ‖s_θ(x,t) − target‖²` to
    /// `grad` and returns the unscaled weighted squared residual.
    fn accumulate(&self, s: &TrainSample<T>, scale: T, ws: &mut Workspace<T>, grad: &mut [T]) -> T {
        let (d, h) = (self.d_in, self.hidden);
        let d0 = d + D_TIME;
        let lay = layout(d, h);
        let p = &self.params;
        self.forward_ws(&s.x, s.t, ws);
        let mut sq = T::zero();
        let coef = T::two() * s.weight * scale;
        for o in 0..d {
            let r = ws.out[o] - s.target[o];
            sq = sq + r * r;
            ws.d_out[o] = coef * r;
        }
        if coef == T::zero() {
            return s.weight * sq;
        }
        for o in 0..d {
            let g = ws.d_out[o];
            grad[lay.b3 + o] = grad[lay.b3 + o] + g;
            let row = &mut grad[lay.w3 + o * h..lay.w3 + (o + 1) * h];
            for (gw, &a) in row.iter_mut().zip(&ws.h2) {
                *gw = *gw + g * a;
            }
        }
        for j in 0..h {
            let mut acc = T::zero();
            for o in 0..d {
                acc = acc + p[lay.w3 + o * h + j] * ws.d_out[o];
            }
            ws.d2[j] = acc * (T::one() - ws.h2[j] * ws.h2[j]);
        }
        ws.d1.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..h {
            let g = ws.d2[j];
            grad[lay.b2 + j] = grad[lay.b2 + j] + g;
            let prow = &p[lay.w2 + j * h..lay.w2 + (j + 1) * h];
            let grow = &mut grad[lay.w2 + j * h..lay.w2 + (j + 1) * h];
            for k in 0..h {
                grow[k] = grow[k] + g * ws.h1[k];
                ws.d1[k] = ws.d1[k] + prow[k] * g;
            }
        }
        for k in 0..h {
            let g = ws.d1[k] * (T::one() - ws.h1[k] * ws.h1[k]);
            grad[lay.b1 + k] = grad[lay.b1 + k] + g;
            let row = &mut grad[lay.w1 + k * d0..lay.w1 + (k + 1) * d0];
            for (gw, &z) in row.iter_mut().zip(&ws.z0) {
                *gw = *gw + g * z;
            }
        }
        s.weight * sq
    }

    /// Loss `L = (1/B) Σ λ_i ‖s_θ(x_i, t_i) − target_i‖²` and its exact
    /// gradient, processed sequentially in batch order.
    pub fn loss_and_gradient(&self, batch: &[TrainSample<T>]) -> Result<(T, Vec<T>)> {
        let mut grad = vec![T::zero(); self.params.len()];
        let loss = self.accumulate_batch(batch, T::lit(batch.len().max(1) as f64), &mut grad)?;
        Ok((loss, grad))
    }

    /// Adds the gradient of `(1/denominator) Σ λ‖r‖²` over `batch` into
    /// `grad` and returns that partial loss.
    pub fn accumulate_batch(&self, batch: &[TrainSample<T>], denominator: T, grad: &mut [T]) -> Result<T> {
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                found: grad.len(),
            });
        }
        let scale = T::one() / denominator;
        let mut ws = Workspace::new(self);
        let mut loss = T::zero();
        for s in batch {
            self.check_input(&s.x)?;
            self.check_input(&s.target)?;
            loss = loss + self.accumulate(s, scale, &mut ws, grad);
        }
        Ok(loss * scale)
    }
}

/// Exact parameter gradients of the weighted DSM loss over a batch.
pub fn net_gradients<T: Real>(net: &ScoreNet<T>, batch: &[TrainSample<T>]) -> Result<Vec<T>> {
    Ok(net.loss_and_gradient(batch)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_batch(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<TrainSample<f64>> {
        (0..n)
            .map(|_| TrainSample {
                x: (0..d).map(|_| rng.sample(StandardNormal)).collect(),
                t: rng.random_range(0.01..1.0),
                target: (0..d).map(|_| rng.sample(StandardNormal)).collect(),
                weight: rng.random_range(0.1..1.0),
            })
            .collect()
    }

    fn perturbed_net(seed: u64, d: usize, h: usize) -> ScoreNet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = ScoreNet::new(d, h, 1.0, &mut rng).unwrap();
        let lay = layout(d, h);
        for w in &mut net.params_mut()[lay.b1..] {
            *w += 0.3 * rng.sample::<f64, _>(StandardNormal);
        }
        net
    }

    #[test]
    fn zero_output_layer_gives_zero_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = ScoreNet::<f64>::new(4, 16, 1.0, &mut rng).unwrap();
        assert_eq!(net.widths(), [8, 16, 16, 4]);
        for x in [[0.0; 4], [1e3, -1e3, 5.0, 0.1]] {
            assert_eq!(net.forward(&x, 0.3).unwrap(), vec![0.0; 4]);
        }
        assert!(net.forward(&[0.0; 3], 0.3).is_err());
    }

    #[test]
    fn large_inputs_stay_finite() {
        let net = perturbed_net(3, 4, 32);
        let out = net.forward(&[1e3, -1e3, 1e3, -1e3], 0.5).unwrap();
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn golden_forward_value() {
        // Hand-built 1-input, 1-hidden-unit network.
        // z0 = [x, t, sin 2πt, cos 2πt, sin 4πt] with t = 0.25 → [0.5, 0.25, 1, 0, 0]
        let mut net = ScoreNet::<f64>::zeros(1, 1, 1.0).unwrap();
        let p = net.params_mut();
        p[..5].copy_from_slice(&[1.0, 2.0, 0.5, 0.0, 0.0]); // W1
        p[5] = -0.25; // b1
        p[6] = 1.5; // W2
        p[7] = 0.1; // b2
        p[8] = 2.0; // W3
        p[9] = -0.3; // b3
        let a1 = (0.5f64 + 0.5 + 0.5 - 0.25).tanh();
        let a2 = (1.5 * a1 + 0.1).tanh();
        let expected = 2.0 * a2 - 0.3;
        let got = net.forward(&[0.5], 0.25).unwrap()[0];
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..3 {
            let net = perturbed_net(round, 4, 24);
            let batch = random_batch(&mut rng, 4, 6);
            let (_, grad) = net.loss_and_gradient(&batch).unwrap();
            for _ in 0..20 {
                let k = rng.random_range(0..net.n_params());
                let h = 1e-5;
                let mut plus = net.clone();
                plus.params_mut()[k] += h;
                let mut minus = net.clone();
                minus.params_mut()[k] -= h;
                let fd = (plus.loss_and_gradient(&batch).unwrap().0 - minus.loss_and_gradient(&batch).unwrap().0)
                    / (2.0 * h);
                let denom = fd.abs().max(grad[k].abs()).max(1e-8);
                assert!((fd - grad[k]).abs() / denom <= 1e-5, "param {k}: fd {fd} vs {}", grad[k]);
            }
        }
    }

    #[test]
    fn zero_residual_or_zero_weight_gives_zero_gradient() {
        let net = perturbed_net(5, 2, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut batch = random_batch(&mut rng, 2, 4);
        for s in &mut batch {
            s.target = net.forward(&s.x, s.t).unwrap();
        }
        let (loss, g) = net.loss_and_gradient(&batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));

        let mut batch = random_batch(&mut rng, 2, 4);
        for s in &mut batch {
            s.weight = 0.0;
        }
        assert!(net_gradients(&net, &batch).unwrap().iter().all(|v| *v == 0.0));
    }
}
