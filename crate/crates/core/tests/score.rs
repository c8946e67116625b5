// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use qdiff_core::qstate::RealEmbedding;
use qdiff_core::score::{
    train, OuParams, Provenance, ScoreDataset, ScoreModel, ScoreNet, TrainConfig, Weighting,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_data(n: usize, seed: u64) -> ScoreDataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n).map(|_| RealEmbedding(vec![rng.sample(StandardNormal)])).collect();
    ScoreDataset::new(Provenance::ToyGaussian, samples).unwrap()
}

/// RMSE against the analytic score `−x` (unit Gaussian data, α = β = 1)
/// over x ∈ [−2, 2] and t ∈ {0.1, 0.5, 1}.
fn rmse_vs_unit_gaussian(net: &ScoreNet<f64>) -> f64 {
    let mut se = 0.0;
    let mut n = 0;
    for t in [0.1, 0.5, 1.0] {
        for k in 0..=40 {
            let x = -2.0 + 0.1 * k as f64;
            let s = net.score(&[x], t).unwrap()[0];
            se += (s + x).powi(2);
            n += 1;
        }
    }
    (se / n as f64).sqrt()
}

fn trained(cfg: &TrainConfig<f64>) -> ScoreNet<f64> {
    let data = gaussian_data(10_000, 21);
    let ou = OuParams::default();
    let net = ScoreNet::new(1, cfg.hidden, ou.t_end, &mut ChaCha8Rng::seed_from_u64(cfg.seed)).unwrap();
    train(net, &data, &ou, cfg).unwrap().net
}

#[test]
fn weighting_does_not_change_the_minimizer() {
    let base = TrainConfig {
        seed: 3,
        ..TrainConfig::default()
    };
    let sigma2 = rmse_vs_unit_gaussian(&trained(&base));
    let one = rmse_vs_unit_gaussian(&trained(&TrainConfig {
        weighting: Weighting::One,
        ..base
    }));
    assert!(sigma2 <= 0.1 && one <= 0.1);
    assert!((sigma2 - one).abs() <= 0.05);
}

#[test]
fn repeated_point_score_points_toward_it() {
    let target = [0.6, -0.8];
    let samples = vec![RealEmbedding(target.to_vec()); 64];
    let data = ScoreDataset::new(Provenance::ToyGaussian, samples).unwrap();
    let ou = OuParams::default();
    let cfg = TrainConfig {
        steps: 1500,
        hidden: 64,
        seed: 5,
        ..TrainConfig::default()
    };
    let net = ScoreNet::new(2, cfg.hidden, ou.t_end, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let net = train(net, &data, &ou, &cfg).unwrap().net;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = 0.05;
    let mut good = 0;
    for _ in 0..200 {
        let xt = ou.sample_forward(&target, t, &mut rng).unwrap();
        let s = net.score(&xt, t).unwrap();
        let dot: f64 = s.iter().zip(target.iter().zip(&xt)).map(|(a, (b, c))| a * (b - c)).sum();
        good += usize::from(dot > 0.0);
    }
    assert!(good >= 180, "{good}/200 probes point toward the data point");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kernel_moments_match_for_any_time(t in 0.05f64..3.0, x0 in -2.0f64..2.0, seed in any::<u64>()) {
        let ou = OuParams::default();
        let (m, var) = ou.kernel(t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| ou.sample_forward(&[x0], t, &mut rng).unwrap()[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (var / n as f64).sqrt();
        let se_var = var * (2.0 / (n - 1) as f64).sqrt();
        prop_assert!((mean - m * x0).abs() <= 4.0 * se_mean);
        prop_assert!((v - var).abs() <= 4.0 * se_var);
    }
}
