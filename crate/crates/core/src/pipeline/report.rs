// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! `report`: aggregates evaluated runs into a table and plot-ready CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::eval::{MetricsRecord, PerStateRecord, METRICS_FILE, PER_STATE_FILE};
use super::io;
use super::train_cmd::LOSS_FILE;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const HISTOGRAM_FILE: &str = "fidelity_histogram.csv";
pub const LOSS_CURVES_FILE: &str = "loss_curves.csv";

#[derive(Clone, Debug)]
pub struct RunData {
    pub dir: PathBuf,
    pub metrics: MetricsRecord,
    pub per_state: Vec<PerStateRecord>,
    /// `(step, raw, smoothed)` rows of the loss curve, if the run was trained.
    pub loss: Vec<(u64, f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub runs: Vec<RunData>,
    pub table: String,
    pub summary_csv: String,
    pub histogram_csv: String,
    pub loss_csv: String,
}

/// Run directories under `root`: `root` itself and its immediate
/// subdirectories, whichever contain `metrics.json`.
pub fn find_runs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    if root.join(METRICS_FILE).is_file() {
        dirs.push(root.to_path_buf());
    }
    if root.is_dir() {
        for entry in fs::read_dir(root)? {
            let p = entry?.path();
            if p.is_dir() && p.join(METRICS_FILE).is_file() {
                dirs.push(p);
            }
        }
    }
    Ok(dirs)
}

fn parse_loss(text: &str, path: &Path) -> Result<Vec<(u64, f64, f64)>> {
    let bad = |line: &str| Error::Format(format!("{}: bad loss row {line:?}", path.display()));
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("step"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return Err(bad(l));
            }
            Ok((
                f[0].parse().map_err(|_| bad(l))?,
                f[1].parse().map_err(|_| bad(l))?,
                f[2].parse().map_err(|_| bad(l))?,
            ))
        })
        .collect()
}

fn load_run(dir: &Path, force: bool) -> Result<RunData> {
    let metrics: MetricsRecord = io::read_json(&dir.join(METRICS_FILE), "metrics file")?;
    let digest = metrics.config_digest.clone();
    let mismatch = |what: &str, found: &str| {
        Error::Config(format!(
            "{}: {what} has config digest {found}, metrics.json has {digest}",
            dir.display()
        ))
    };
    let mut per_state = Vec::new();
    if let Ok(text) = fs::read_to_string(dir.join(PER_STATE_FILE)) {
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let r: PerStateRecord = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("{}: {e}", dir.join(PER_STATE_FILE).display())))?;
            if r.config_digest != digest && !force {
                return Err(mismatch(PER_STATE_FILE, &r.config_digest));
            }
            per_state.push(r);
        }
    }
    let mut loss = Vec::new();
    let loss_path = dir.join(LOSS_FILE);
    if let Ok(text) = fs::read_to_string(&loss_path) {
        let found = io::csv_digest(&text).unwrap_or("");
        if found != digest && !force {
            return Err(mismatch(LOSS_FILE, found));
        }
        loss = parse_loss(&text, &loss_path)?;
    }
    Ok(RunData {
        dir: dir.to_path_buf(),
        metrics,
        per_state,
        loss,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Loads every run under `root` and renders the report without writing it.
pub fn build_report(root: &Path, force: bool, bins: usize) -> Result<Report> {
    let dirs = find_runs(root)?;
    if dirs.is_empty() {
        return Err(Error::InvalidInput(format!("no runs found under {}", root.display())));
    }
    let mut runs = dirs.iter().map(|d| load_run(d, force)).collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| a.metrics.run_id.cmp(&b.metrics.run_id).then(a.dir.cmp(&b.dir)));
    let first = runs[0].metrics.config_digest.clone();
    if !force {
        if let Some(r) = runs.iter().find(|r| r.metrics.config_digest != first) {
            return Err(Error::Config(format!(
                "runs {} and {} have different config digests; set report.force=true to aggregate anyway",
                runs[0].metrics.run_id, r.metrics.run_id
            )));
        }
    }

    let mut summary = String::from(
        "run_id,config_digest,mode,score_source,n_held_out,mean_noisy_fidelity,mean_denoised_fidelity,\
         mean_baseline_fidelity,improvement,improvement_std_error,sign_test_p,vs_baseline_mean,\
         vs_baseline_std_error,ks_denoised,mse_noisy,mse_denoised\n",
    );
    let mut table = format!(
        "{:<16} {:>6} {:>10} {:>10} {:>10} {:>10} {:>9}\n",
        "run_id", "n", "noisy_F", "denoised_F", "baseline_F", "improve", "sign_p"
    );
    for r in &runs {
        let m = &r.metrics;
        let q = m.quantum.as_ref();
        let v = m.vector.as_ref();
        let mode = serde_json::to_value(m.mode)?;
        let source = serde_json::to_value(m.score_source)?;
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            m.run_id,
            m.config_digest,
            mode.as_str().unwrap_or_default(),
            source.as_str().unwrap_or_default(),
            m.n_held_out,
            fmt_opt(q.map(|q| q.mean_noisy_fidelity)),
            fmt_opt(q.map(|q| q.mean_denoised_fidelity)),
            fmt_opt(q.map(|q| q.mean_baseline_fidelity)),
            fmt_opt(q.map(|q| q.improvement)),
            fmt_opt(q.map(|q| q.vs_noisy.std_error)),
            fmt_opt(q.map(|q| q.vs_noisy.sign_test_p)),
            fmt_opt(q.map(|q| q.vs_baseline.mean)),
            fmt_opt(q.map(|q| q.vs_baseline.std_error)),
            fmt_opt(v.map(|v| v.ks_denoised)),
            fmt_opt(v.map(|v| v.mse_noisy)),
            fmt_opt(v.map(|v| v.mse_denoised)),
        )
        .expect("write to String");
        let cell = |x: Option<f64>| x.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        writeln!(
            table,
            "{:<16} {:>6} {:>10} {:>10} {:>10} {:>10} {:>9}",
            m.run_id,
            m.n_held_out,
            cell(q.map(|q| q.mean_noisy_fidelity)),
            cell(q.map(|q| q.mean_denoised_fidelity)),
            cell(q.map(|q| q.mean_baseline_fidelity)),
            cell(q.map(|q| q.improvement)),
            cell(q.map(|q| q.vs_noisy.sign_test_p)),
        )
        .expect("write to String");
    }

    let bins = bins.max(1);
    let mut histogram = String::from("run_id,bin_lo,bin_hi,noisy_count,denoised_count,baseline_count\n");
    for r in runs.iter().filter(|r| r.metrics.quantum.is_some()) {
        let mut counts = vec![[0usize; 3]; bins];
        for s in &r.per_state {
            for (k, f) in [s.noisy_fidelity, s.denoised_fidelity, s.baseline_fidelity].into_iter().enumerate() {
                if let Some(f) = f {
                    let b = ((f.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
                    counts[b][k] += 1;
                }
            }
        }
        for (b, c) in counts.iter().enumerate() {
            writeln!(
                histogram,
                "{},{},{},{},{},{}",
                r.metrics.run_id,
                b as f64 / bins as f64,
                (b + 1) as f64 / bins as f64,
                c[0],
                c[1],
                c[2]
            )
            .expect("write to String");
        }
    }

    let mut loss = String::from("run_id,step,raw_loss,smoothed_loss\n");
    for r in &runs {
        for (step, raw, smooth) in &r.loss {
            writeln!(loss, "{},{step},{raw},{smooth}", r.metrics.run_id).expect("write to String");
        }
    }

    Ok(Report {
        runs,
        table,
        summary_csv: summary,
        histogram_csv: histogram,
        loss_csv: loss,
    })
}

/// Builds the report and writes the CSVs into `root`. Returns the table.
pub fn cmd_report(root: &Path, force: bool, bins: usize) -> Result<String> {
    let report = build_report(root, force, bins)?;
    let digest = &report.runs[0].metrics.config_digest;
    io::atomic_write(&root.join(SUMMARY_FILE), &io::csv_with_digest(digest, report.summary_csv.as_bytes()))?;
    io::atomic_write(&root.join(HISTOGRAM_FILE), &io::csv_with_digest(digest, report.histogram_csv.as_bytes()))?;
    io::atomic_write(&root.join(LOSS_CURVES_FILE), &io::csv_with_digest(digest, report.loss_csv.as_bytes()))?;
    Ok(report.table)
}
