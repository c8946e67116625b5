// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if a criterion outside `KNOWN_UNMET` fails.
//!
//! `cargo test -p qdiff-core --test acceptance` runs everything;
//! `cargo test -p qdiff-core --test acceptance -- 4 5` runs a subset.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qdiff_core::lindblad::{analytic, integrate_master, Hamiltonian, MasterSolution, NoiseModel, QubitNoise};
use qdiff_core::pipeline::io::{sha256_hex, write_json};
use qdiff_core::pipeline::train_cmd::load_checkpoint;
use qdiff_core::pipeline::{cmd_denoise_eval, cmd_make_dataset, cmd_train, ExperimentConfig};
use qdiff_core::qstate::{bloch_vector, fidelity_pure, trace_distance, DensityMatrix, StateVector};
use qdiff_core::reverse::{denoise, ReverseConfig};
use qdiff_core::score::{GaussianScore, OuParams, ScoreModel, ScoreNet, TrainSample};
use qdiff_core::stats::{ks_statistic, mean_sd};
use qdiff_core::unravel::{ensemble_density, simulate_ensemble, simulate_trajectory, ForwardSde, Integrator, SdeConfig};
use qdiff_core::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::json;

/// Criteria whose thresholds the reference configuration does not reach.
/// They still run at full strength and print FAIL; see the README.
const KNOWN_UNMET: &[u32] = &[8];

const SEED: u64 = 2026;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn plus() -> StateVector<f64> {
    StateVector::from_amplitudes(vec![Complex::one(), Complex::one()]).unwrap()
}

fn rel_err_over(sol: &MasterSolution<f64>, obs: impl Fn(&DensityMatrix<f64>) -> f64, law: impl Fn(f64) -> f64) -> f64 {
    let o0 = obs(&sol.states[0]);
    sol.times
        .iter()
        .zip(&sol.states)
        .map(|(t, r)| (obs(r) / o0 - law(*t)).abs() / law(*t))
        .fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let h = Hamiltonian::zero(1).unwrap();
    let (dt, t_end) = (1e-3, 2.0);
    let plus_rho = DensityMatrix::pure(&plus()).unwrap();
    let excited = DensityMatrix::pure(&StateVector::basis(1, 1).unwrap()).unwrap();
    let sol = |rho: &DensityMatrix<f64>, q| integrate_master(rho, &h, &NoiseModel::single(q).unwrap(), t_end, dt).unwrap();
    let e_p = rel_err_over(&sol(&plus_rho, QubitNoise::dephasing(0.5)), |r| r.operator()[(0, 1)].abs(), |t| {
        analytic::dephasing_coherence(0.5, t)
    });
    let e_d = rel_err_over(
        &sol(&plus_rho, QubitNoise::depolarizing(0.1)),
        |r| {
            let b = bloch_vector(r).unwrap();
            (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
        },
        |t| analytic::depolarizing_bloch(0.1, t),
    );
    let e_a = rel_err_over(&sol(&excited, QubitNoise::amplitude_damping(0.2)), |r| r.operator()[(1, 1)].re, |t| {
        analytic::excited_population(0.2, t)
    });
    let secs = start.elapsed().as_secs_f64();
    let worst = e_p.max(e_d).max(e_a);
    outcome(
        worst <= 1e-6 && secs < 5.0,
        format!("max rel err dephasing {e_p:.2e}, depolarizing {e_d:.2e}, amplitude {e_a:.2e} (<= 1e-6); {secs:.2}s (< 5s)"),
    )
}

/// Ensemble vs RK4 for the three noise settings. Writes metric files into `dir`.
fn criterion_2(dir: &Path) -> Outcome {
    let n = 20_000;
    let h = Hamiltonian::precession(1, 1.0).unwrap();
    let settings = [
        ("dephasing", QubitNoise::dephasing(0.5)),
        ("depolarizing", QubitNoise::depolarizing(0.1)),
        (
            "combined",
            QubitNoise {
                gamma_d: [0.1; 3],
                gamma_a: 0.2,
                gamma_p: 0.5,
            },
        ),
    ];
    let cfg = SdeConfig::new(1.0, 1e-3, Integrator::EulerMaruyama, qdiff_core::rng::derive_seed(SEED, "forward-sde"));
    let mut passed = true;
    let mut parts = Vec::new();
    let mut record = BTreeMap::new();
    for (name, q) in settings {
        let start = Instant::now();
        let noise = NoiseModel::single(q).unwrap();
        let ens = simulate_ensemble(&plus(), &h, &noise, &cfg, n, 100).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let master = integrate_master(&DensityMatrix::pure(&plus()).unwrap(), &h, &noise, 1.0, 1e-3).unwrap();
        let d = trace_distance(&ensemble_density(&ens, ens.times().len() - 1).unwrap(), master.final_state()).unwrap();
        let mut csv = Vec::new();
        ens.write_summary_csv(&mut csv, Some(&master)).unwrap();
        fs::write(dir.join(format!("c2_{name}_summary.csv")), csv).unwrap();
        record.insert(name, json!({ "trajectories": n, "trace_distance": d }));
        passed &= d <= 0.025 && secs < 60.0;
        parts.push(format!("{name} {d:.4} in {secs:.1}s"));
    }
    write_json(&dir.join("c2_metrics.json"), &record).unwrap();
    outcome(passed, format!("trace distance (<= 0.025, < 60s each): {}", parts.join(", ")))
}

fn criterion_3() -> Outcome {
    let h = Hamiltonian::precession(1, 1.0).unwrap();
    let sde = ForwardSde::new(&h, &NoiseModel::zero(1).unwrap()).unwrap();
    let psi0 = StateVector::from_amplitudes(vec![Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)]).unwrap();
    let exact = StateVector::new(h.matrix().scale(Complex::new(0.0, -1.0)).expm().apply(psi0.amplitudes()), false)
        .unwrap()
        .normalize()
        .unwrap();
    let run = |integ| {
        let traj = simulate_trajectory(&sde, &psi0, &SdeConfig::new(1.0, 1e-4, integ, SEED), 0).unwrap();
        let fid = fidelity_pure(&traj.states.last().unwrap().normalize().unwrap(), &exact).unwrap();
        let dev = traj.norms.iter().map(|n: &f64| (n - 1.0).abs()).fold(0.0, f64::max);
        (fid, dev)
    };
    let (fid, dev) = run(Integrator::PlatenSrk);
    let (em_fid, em_dev) = run(Integrator::EulerMaruyama);
    outcome(
        fid >= 1.0 - 1e-6 && dev <= 1e-8,
        format!(
            "platen_srk: 1 - fidelity {:.2e} (<= 1e-6), max |norm - 1| {dev:.2e} (<= 1e-8); \
             euler_maruyama for reference: {:.2e}, {em_dev:.2e}",
            1.0 - fid,
            1.0 - em_fid
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let ou = OuParams::<f64>::default();
    let x0 = [1.5];
    let n = 50_000;
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for (k, t) in [0.1, 0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + k as u64);
        let xs: Vec<f64> = (0..n).map(|_| ou.sample_forward(&x0, t, &mut rng).unwrap()[0]).collect();
        let (m, var) = ou.kernel(t).unwrap();
        let (mean, sd) = mean_sd(&xs);
        let z_mean = (mean - m * x0[0]).abs() / (var / n as f64).sqrt();
        let z_var = (sd * sd - var).abs() / (var * (2.0 / (n as f64 - 1.0)).sqrt());
        worst = worst.max(z_mean).max(z_var);
        passed &= z_mean <= 3.0 && z_var <= 3.0;
    }
    let limit = ou.kernel(20.0).unwrap().1;
    let limit_err = (limit - 1.0 / ou.alpha).abs();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        passed && limit_err <= 1e-3 && secs < 10.0,
        format!("worst moment deviation {worst:.2} SE (<= 3); |var(20) - 1/alpha| {limit_err:.1e} (<= 1e-3); {secs:.2}s (< 10s)"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (d, hidden) = (4, 128);
    let base = ScoreNet::new(d, hidden, 1.0, &mut rng).unwrap();
    let params: Vec<f64> = base.params().iter().map(|p| p + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
    let net = ScoreNet::from_params(d, hidden, 1.0, params).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..5 {
        let batch: Vec<TrainSample<f64>> = (0..8)
            .map(|_| TrainSample {
                x: (0..d).map(|_| rng.sample(StandardNormal)).collect(),
                t: rng.random_range(0.001..1.0),
                target: (0..d).map(|_| rng.sample(StandardNormal)).collect(),
                weight: rng.random_range(0.1..1.0),
            })
            .collect();
        let (_, grad) = net.loss_and_gradient(&batch).unwrap();
        for _ in 0..20 {
            let k = rng.random_range(0..net.n_params());
            let h = 1e-5;
            let shifted = |delta: f64| {
                let mut p = net.params().to_vec();
                p[k] += delta;
                ScoreNet::from_params(d, hidden, 1.0, p).unwrap().loss_and_gradient(&batch).unwrap().0
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let denom = fd.abs().max(grad[k].abs()).max(1e-8);
            worst = worst.max((fd - grad[k]).abs() / denom);
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-5 && secs < 5.0,
        format!("{checked} parameters over 5 batches, max relative error {worst:.2e} (<= 1e-5); {secs:.2}s (< 5s)"),
    )
}

fn toy_config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig::from_json_with_overrides(
        r#"{"schema": "qdiff.experiment/1", "run_id": "toy-gaussian"}"#,
        &[
            "dataset.kind=\"toy-gaussian\"".into(),
            "dataset.size=10000".into(),
            format!("out_dir={}", json!(dir.display().to_string())),
        ],
    )
    .unwrap()
}

/// RMSE of a trained network vs the analytic score `−x` of unit Gaussian
/// data. Writes metric files into `dir`.
fn criterion_6(dir: &Path) -> Outcome {
    let start = Instant::now();
    let cfg = toy_config(dir);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let rmse = single.install(|| {
        cmd_make_dataset(&cfg, dir).unwrap();
        cmd_train(&cfg, dir).unwrap();
        let net = load_checkpoint(dir).unwrap();
        let mut se = 0.0;
        let mut n = 0;
        for t in [0.1, 0.5, 1.0] {
            for k in 0..=80 {
                let x = -2.0 + 0.05 * k as f64;
                se += (net.score(&[x], t).unwrap()[0] + x).powi(2);
                n += 1;
            }
        }
        (se / n as f64).sqrt()
    });
    let secs = start.elapsed().as_secs_f64();
    write_json(&dir.join("c6_metrics.json"), &json!({ "rmse": rmse, "train_steps": cfg.train.steps })).unwrap();
    outcome(
        rmse <= 0.1 && secs < 300.0,
        format!("RMSE {rmse:.4} (<= 0.1) with default training settings; {secs:.1}s single-threaded (< 300s)"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let ou = OuParams::<f64>::default();
    let score = GaussianScore {
        ou,
        mean: vec![0.0],
        variance: 1.0,
    };
    let n = 50_000;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let prior_sd = ou.stationary_variance().sqrt();
    let prior: Vec<f64> = (0..n).map(|_| prior_sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let source: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let cfg = ReverseConfig {
        steps: 1000,
        seed: SEED,
        ..ReverseConfig::default()
    };
    let out: Vec<f64> = prior
        .par_iter()
        .enumerate()
        .map(|(i, &x)| denoise(&[x], &cfg, &ou, &score, i as u64).unwrap().estimate[0])
        .collect();
    let (mean, sd) = mean_sd(&out);
    let var_err = (sd * sd - 1.0).abs();
    let ks = ks_statistic(&out, &source);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mean.abs() <= 0.03 && var_err <= 0.05 && ks <= 0.02,
        format!("mean {mean:+.4} (+-0.03), variance {:.4} (1 +- 5%), KS {ks:.4} (<= 0.02); {secs:.1}s", sd * sd),
    )
}

fn qem_config(dir: &Path) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/qem.json");
    ExperimentConfig::load(&path, &[format!("out_dir={}", json!(dir.display().to_string()))]).unwrap()
}

/// End-to-end denoising on 200 held-out Haar states. Writes the run into `dir`.
fn criterion_8(dir: &Path) -> Outcome {
    let start = Instant::now();
    let cfg = qem_config(dir);
    cmd_make_dataset(&cfg, dir).unwrap();
    cmd_train(&cfg, dir).unwrap();
    let m = cmd_denoise_eval(&cfg, dir).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let q = m.quantum.expect("quantum metrics");
    let gain = q.improvement;
    let p = q.vs_noisy.sign_test_p;
    let margin = q.vs_baseline.mean / q.vs_baseline.std_error;
    outcome(
        m.n_held_out == 200 && gain >= 0.05 && q.vs_noisy.mean > 0.0 && p <= 0.05 && margin > 2.0 && secs < 600.0,
        format!(
            "n {}, noisy F {:.4}, denoised F {:.4}, gain {gain:.4} (>= 0.05), improved {}/{} sign-test p {p:.3} (<= 0.05), \
             vs zero-score baseline {:.4} = {margin:.2} SE (> 2); {secs:.0}s (< 600s)",
            m.n_held_out,
            q.mean_noisy_fidelity,
            q.mean_denoised_fidelity,
            q.vs_noisy.positive,
            q.vs_noisy.n,
            q.vs_baseline.mean,
        ),
    )
}

/// Every non-timing file under `dir`, relative path to bytes.
fn metric_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() && p.file_name().unwrap() != "timings.json" {
            out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
        }
    }
    out
}

fn criterion_9(first: &[(u32, PathBuf)]) -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    for (c, dir) in first {
        let again = tempfile::tempdir().unwrap();
        match c {
            2 => drop(criterion_2(again.path())),
            6 => drop(criterion_6(again.path())),
            8 => drop(criterion_8(again.path())),
            _ => unreachable!(),
        }
        let (a, b) = (metric_files(dir), metric_files(again.path()));
        let same = !a.is_empty() && a == b;
        passed &= same;
        let digest = sha256_hex(&a.values().flatten().copied().collect::<Vec<u8>>());
        parts.push(format!(
            "criterion {c}: {} files {} (sha256 {})",
            a.len(),
            if same { "identical" } else { "DIFFER" },
            &digest[..12]
        ));
    }
    outcome(passed && first.len() == 3, parts.join("; "))
}

fn main() {
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |c: u32| filter.is_empty() || filter.contains(&c);
    let mut failed_required = Vec::new();
    let mut report = |c: u32, o: Outcome| {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let note = if !o.passed && KNOWN_UNMET.contains(&c) { " [known unmet]" } else { "" };
        println!("criterion {c}: {tag}{note} {}", o.detail);
        if !o.passed && !KNOWN_UNMET.contains(&c) {
            failed_required.push(c);
        }
    };
    let keep: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut reruns = Vec::new();
    if wanted(1) {
        report(1, criterion_1());
    }
    if wanted(2) || wanted(9) {
        report(2, criterion_2(keep[0].path()));
        reruns.push((2, keep[0].path().to_path_buf()));
    }
    if wanted(3) {
        report(3, criterion_3());
    }
    if wanted(4) {
        report(4, criterion_4());
    }
    if wanted(5) {
        report(5, criterion_5());
    }
    if wanted(6) || wanted(9) {
        report(6, criterion_6(keep[1].path()));
        reruns.push((6, keep[1].path().to_path_buf()));
    }
    if wanted(7) {
        report(7, criterion_7());
    }
    if wanted(8) || wanted(9) {
        report(8, criterion_8(keep[2].path()));
        reruns.push((8, keep[2].path().to_path_buf()));
    }
    if wanted(9) {
        report(9, criterion_9(&reruns));
    }
    if !failed_required.is_empty() {
        eprintln!("acceptance: required criteria failed: {failed_required:?}");
        std::process::exit(1);
    }
}
