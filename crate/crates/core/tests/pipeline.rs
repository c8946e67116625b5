// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;

use qdiff_core::pipeline::dataset::{DatasetFile, Split};
use qdiff_core::pipeline::eval::MetricsRecord;
use qdiff_core::pipeline::report::build_report;
use qdiff_core::pipeline::{
    cmd_denoise_eval, cmd_make_dataset, cmd_oracle_check, cmd_report, cmd_train, ExperimentConfig,
};
use qdiff_core::Error;

fn config(dir: &Path, overrides: &[&str]) -> ExperimentConfig {
    let mut all: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    all.push(format!("out_dir={}", serde_json::Value::String(dir.display().to_string())));
    ExperimentConfig::from_json_with_overrides(r#"{"schema": "qdiff.experiment/1"}"#, &all).unwrap()
}

fn file_sha(path: &Path) -> String {
    qdiff_core::pipeline::io::sha256_hex(&fs::read(path).unwrap())
}

const QUICK: &[&str] = &[
    "dataset.size=50",
    "train.steps=20",
    "train.hidden=16",
    "train.batch_size=32",
    "reverse.steps=20",
    "reverse.posterior_samples=2",
    "ou.t_end=0.7",
];

#[test]
fn haar_dataset_shape_and_split() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &["dataset.corruption_times=[0.0, 0.1]", "sde.dt=0.01"]);
    let ds = cmd_make_dataset(&cfg, tmp.path()).unwrap();
    assert_eq!(ds.samples.len(), 1000);
    assert_eq!(ds.split(Split::HeldOut).count(), 200);
    for s in &ds.samples {
        assert_eq!(s.clean.0.len(), 4);
        assert!((s.clean.norm() - 1.0).abs() <= 1e-12);
        assert_eq!(s.corrupted[0].x, s.clean);
        assert!((s.corrupted[1].x.norm() - 1.0).abs() <= 1e-12);
    }
    let loaded = DatasetFile::load(&tmp.path().join("dataset.json")).unwrap();
    assert_eq!(loaded.config_digest, cfg.digest());
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        let cfg = config(dir, QUICK);
        cmd_make_dataset(&cfg, dir).unwrap();
        cmd_train(&cfg, dir).unwrap();
        cmd_denoise_eval(&cfg, dir).unwrap();
    }
    for f in ["dataset.json", "checkpoint.bin", "loss.csv", "metrics.json", "per_state.jsonl", "reverse_paths.bin"] {
        assert_eq!(file_sha(&a.path().join(f)), file_sha(&b.path().join(f)), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    let mut quick = QUICK.to_vec();
    quick.push("seed=7");
    let cfg = config(c.path(), &quick);
    cmd_make_dataset(&cfg, c.path()).unwrap();
    assert_ne!(file_sha(&a.path().join("dataset.json")), file_sha(&c.path().join("dataset.json")));
}

#[test]
fn loss_file_has_one_row_per_step() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), QUICK);
    cmd_make_dataset(&cfg, tmp.path()).unwrap();
    let rec = cmd_train(&cfg, tmp.path()).unwrap();
    let text = fs::read_to_string(tmp.path().join("loss.csv")).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("step")).count();
    assert_eq!(rows, 20);
    assert_eq!(rec.steps, 20);
    assert_eq!(rec.checkpoint_sha256, file_sha(&tmp.path().join("checkpoint.bin")));
}

#[test]
fn missing_inputs_are_clean_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), QUICK);
    let err = cmd_train(&cfg, tmp.path()).unwrap_err();
    assert_eq!(err.exit_code(), 1, "{err}");
    let err = cmd_denoise_eval(&cfg, tmp.path()).unwrap_err();
    assert_eq!(err.exit_code(), 1, "{err}");
}

#[test]
fn empty_held_out_set_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &["dataset.size=2", "reverse.score_source=\"zero\""]);
    cmd_make_dataset(&cfg, tmp.path()).unwrap();
    let err = cmd_denoise_eval(&cfg, tmp.path()).unwrap_err();
    assert!(err.to_string().contains("held-out set is empty"), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn oracle_check_default_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let report = cmd_oracle_check(&config(tmp.path(), &[]), tmp.path()).unwrap();
    assert!(report.passed);
    assert_eq!(report.checks.len(), 6);
    assert!(tmp.path().join("ensemble_summary.csv").is_file());
}

#[test]
fn coarse_step_fails_the_strong_error_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &["sde.dt=0.2"]);
    let err = cmd_oracle_check(&cfg, tmp.path()).unwrap_err();
    assert!(matches!(err, Error::CheckFailed(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("em_strong_error"), "{err}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("oracle_check.json")).unwrap()).unwrap();
    for c in report["checks"].as_array().unwrap() {
        if c["name"].as_str().unwrap().starts_with("analytic") {
            assert_eq!(c["passed"], true);
        }
    }
}

#[test]
fn zero_noise_runs_only_unitary_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        &["noise.0.gamma_p=0", "sde.dt=1e-4", "sde.integrator=platen_srk"],
    );
    let report = cmd_oracle_check(&cfg, tmp.path()).unwrap();
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["unitary_fidelity", "unitary_norm", "lipschitz_finite"]);
}

#[test]
fn untrained_network_injects_no_signal() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        &["train.steps=0", "train.hidden=16", "ou.t_end=0.7", "reverse.posterior_samples=64", "eval.export_paths=0"],
    );
    cmd_make_dataset(&cfg, tmp.path()).unwrap();
    cmd_train(&cfg, tmp.path()).unwrap();
    let m = cmd_denoise_eval(&cfg, tmp.path()).unwrap();
    let q = m.quantum.unwrap();
    assert_eq!(q.vs_baseline.n, 200);
    assert!(
        q.vs_baseline.mean.abs() <= 2.0 * q.vs_baseline.std_error,
        "{} vs {}",
        q.vs_baseline.mean,
        q.vs_baseline.std_error
    );
    assert!((q.mean_baseline_fidelity - q.mean_noisy_fidelity).abs() <= 1e-12);
}

#[test]
fn analytic_score_on_toy_data_recovers_the_source() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        &[
            "dataset.kind=\"toy-gaussian\"",
            "dataset.size=10000",
            "reverse.score_source=\"analytic\"",
            "reverse.steps=1000",
        ],
    );
    cmd_make_dataset(&cfg, tmp.path()).unwrap();
    let m = cmd_denoise_eval(&cfg, tmp.path()).unwrap();
    let v = m.vector.unwrap();
    assert!(v.denoised_mean.abs() <= 0.05, "{}", v.denoised_mean);
    assert!((v.denoised_variance - v.clean_variance).abs() <= 0.1 * v.clean_variance);
    assert!(v.ks_denoised <= 0.04, "{}", v.ks_denoised);
    assert!(v.ks_noisy > v.ks_denoised);
}

#[test]
fn quantum_literal_mode_produces_physical_states() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        &[
            "dataset.size=40",
            "ou.t_end=0.2",
            "sde.dt=0.01",
            "reverse.mode=\"quantum-literal\"",
            "reverse.score_source=\"kde-oracle\"",
            "reverse.steps=20",
        ],
    );
    cmd_make_dataset(&cfg, tmp.path()).unwrap();
    let m = cmd_denoise_eval(&cfg, tmp.path()).unwrap();
    let q = m.quantum.unwrap();
    for f in [q.mean_noisy_fidelity, q.mean_denoised_fidelity, q.mean_baseline_fidelity] {
        assert!((0.0..=1.0).contains(&f));
    }
}

fn evaluated_run(root: &Path, name: &str, extra: &[&str]) {
    let dir = root.join(name);
    let mut o = vec!["dataset.size=20", "reverse.score_source=\"zero\"", "reverse.steps=5"];
    o.extend_from_slice(extra);
    let run_id = format!("run_id={name}");
    o.push(&run_id);
    let cfg = config(&dir, &o);
    cmd_make_dataset(&cfg, &dir).unwrap();
    cmd_denoise_eval(&cfg, &dir).unwrap();
}

#[test]
fn report_sorts_runs_and_checks_digests() {
    let root = tempfile::tempdir().unwrap();
    let err = cmd_report(root.path(), false, 10).unwrap_err();
    assert!(err.to_string().contains("no runs found"));
    assert_eq!(err.exit_code(), 1);

    evaluated_run(root.path(), "b-run", &[]);
    evaluated_run(root.path(), "a-run", &[]);
    let report = build_report(root.path(), false, 10).unwrap();
    let ids: Vec<&str> = report.runs.iter().map(|r| r.metrics.run_id.as_str()).collect();
    assert_eq!(ids, ["a-run", "b-run"]);
    let table = cmd_report(root.path(), false, 10).unwrap();
    assert_eq!(table.lines().count(), 3);
    let summary = fs::read_to_string(root.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().filter(|l| !l.starts_with('#')).count(), 3);
    let hist = fs::read_to_string(root.path().join("fidelity_histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 2 + 2 * 10);

    evaluated_run(root.path(), "c-run", &["seed=99"]);
    let err = cmd_report(root.path(), false, 10).unwrap_err();
    assert!(err.to_string().contains("different config digests"), "{err}");
    assert_eq!(build_report(root.path(), true, 10).unwrap().runs.len(), 3);
}

#[test]
fn single_run_report_has_one_row() {
    let root = tempfile::tempdir().unwrap();
    evaluated_run(root.path(), "only", &[]);
    let table = cmd_report(&root.path().join("only"), false, 5).unwrap();
    assert_eq!(table.lines().count(), 2);
    let m: MetricsRecord =
        serde_json::from_str(&fs::read_to_string(root.path().join("only/metrics.json")).unwrap()).unwrap();
    assert_eq!(m.run_id, "only");
}
