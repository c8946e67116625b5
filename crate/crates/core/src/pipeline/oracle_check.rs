// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! `oracle-check`: analytic decays, unraveling vs master equation, and the
//! strong error of Euler–Maruyama on an exactly solvable test equation.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::lindblad::{analytic, integrate_master, Hamiltonian, NoiseModel, QubitNoise};
use crate::qstate::{bloch_vector, fidelity_pure, trace_distance, DensityMatrix, StateVector};
use crate::rng::{CounterNormal, WienerIncrements};
use crate::unravel::{simulate_ensemble, simulate_trajectory, ForwardSde, Integrator, SdeConfig};

use super::config::{purpose, ExperimentConfig};
use super::io;

pub const REPORT_SCHEMA: &str = "qdiff.oracle-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `"<="` or `">="`: how `value` must compare to `tolerance`.
    pub comparison: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            comparison: "<=".into(),
            passed: value <= tolerance,
            detail,
        }
    }

    fn at_least(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            comparison: ">=".into(),
            passed: value >= tolerance,
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzSummary {
    pub drift_operator_norm: f64,
    pub drift_finite_difference: f64,
    pub diffusion_operator_norms: Vec<f64>,
    pub diffusion_finite_differences: Vec<f64>,
    pub diffusion_time_derivative: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema: String,
    pub run_id: String,
    pub config_digest: String,
    pub checks: Vec<CheckResult>,
    pub lipschitz: LipschitzSummary,
    pub passed: bool,
}

impl OracleReport {
    pub fn failed_names(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Largest relative deviation of `observed(t)` from `expected(t)` over the
/// RK4 grid.
fn max_relative_error(
    rho0: &DensityMatrix<f64>,
    noise: &NoiseModel<f64>,
    t_end: f64,
    dt: f64,
    observed: impl Fn(&DensityMatrix<f64>) -> f64,
    expected: impl Fn(f64) -> f64,
) -> Result<f64> {
    let sol = integrate_master(rho0, &Hamiltonian::zero(1)?, noise, t_end, dt)?;
    let scale = observed(rho0);
    let mut worst: f64 = 0.0;
    for (t, rho) in sol.times.iter().zip(&sol.states) {
        let e = expected(*t);
        worst = worst.max(((observed(rho) / scale) - e).abs() / e);
    }
    Ok(worst)
}

/// Relative errors of the dephasing coherence, depolarizing Bloch length and
/// excited population against their closed forms.
pub fn analytic_decay_errors(t_end: f64, dt: f64) -> Result<[(String, f64); 3]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::new(vec![Complex::new(h, 0.0), Complex::new(h, 0.0)], true)?;
    let plus_rho = DensityMatrix::pure(&plus)?;
    let excited = DensityMatrix::pure(&StateVector::basis(1, 1)?)?;
    let (gp, gd, ga) = (0.5, 0.1, 0.2);

    let deph = max_relative_error(
        &plus_rho,
        &NoiseModel::single(QubitNoise::dephasing(gp))?,
        t_end,
        dt,
        |r| r.operator()[(0, 1)].abs(),
        |t| analytic::dephasing_coherence(gp, t),
    )?;
    let depol = max_relative_error(
        &plus_rho,
        &NoiseModel::single(QubitNoise::depolarizing(gd))?,
        t_end,
        dt,
        |r| bloch_vector(r).map(|b| b[0]).unwrap_or(f64::NAN),
        |t| analytic::depolarizing_bloch(gd, t),
    )?;
    let amp = max_relative_error(
        &excited,
        &NoiseModel::single(QubitNoise::amplitude_damping(ga))?,
        t_end,
        dt,
        |r| r.operator()[(1, 1)].re,
        |t| analytic::excited_population(ga, t),
    )?;
    Ok([
        (format!("dephasing coherence, gamma_p = {gp}"), deph),
        (format!("depolarizing Bloch length, gamma = {gd} per axis"), depol),
        (format!("excited population, gamma_a = {ga}"), amp),
    ])
}

/// Mean 2-norm error at `t_end` of the chosen integrator on the dephasing
/// test equation, whose exact solution is `diag(e^{i√γ W}, e^{−i√γ W}) ψ₀`.
pub fn strong_error(
    gamma: f64,
    t_end: f64,
    dt: f64,
    integrator: Integrator,
    paths: usize,
    seed: u64,
) -> Result<f64> {
    let noise = NoiseModel::single(QubitNoise::dephasing(gamma))?;
    let sde = ForwardSde::new(&Hamiltonian::zero(1)?, &noise)?;
    let cfg = SdeConfig::new(t_end, dt, integrator, seed);
    cfg.validate()?;
    let steps = cfg.steps();
    let step = cfg.step_size();
    let src = CounterNormal::new(seed);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi0 = [Complex::new(h, 0.0), Complex::new(h, 0.0)];
    let errors: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|id| {
            let mut psi = psi0.to_vec();
            let mut w = 0.0;
            for k in 0..steps {
                let dw = WienerIncrements::generate(&src, id, k as u64, 1, step);
                w += dw.values[0];
                psi = sde.step(integrator, &psi, step, &dw.values);
            }
            let phase = gamma.sqrt() * w;
            let exact = [psi0[0] * Complex::cis(phase), psi0[1] * Complex::cis(-phase)];
            psi.iter()
                .zip(&exact)
                .map(|(a, b)| (*a - *b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(errors.iter().sum::<f64>() / paths as f64)
}

/// Runs every check without touching the filesystem.
pub fn run_oracle_checks(cfg: &ExperimentConfig) -> Result<(OracleReport, Option<Vec<u8>>)> {
    let checks_cfg = &cfg.checks;
    let psi0 = cfg.initial_state()?;
    let sde = ForwardSde::new(&cfg.hamiltonian, &cfg.noise)?;
    let sde_cfg = cfg.sde_config(cfg.seed_for(purpose::FORWARD));
    let mut checks = Vec::new();
    let mut summary_csv = None;

    if cfg.noise.is_zero() {
        let traj = simulate_trajectory(&sde, &psi0, &sde_cfg, 0)?;
        let u = cfg
            .hamiltonian
            .matrix()
            .scale(Complex::new(0.0, -sde_cfg.t_end))
            .expm();
        let exact = StateVector::new(u.apply(psi0.amplitudes()), false)?.normalize()?;
        let last = traj.states.last().expect("trajectory has states").normalize()?;
        let fid = fidelity_pure(&last, &exact)?;
        checks.push(CheckResult::at_least(
            "unitary_fidelity",
            fid,
            1.0 - checks_cfg.unitary_fidelity_tol,
            format!("trajectory vs exp(-iHt) psi0 at t = {}", sde_cfg.t_end),
        ));
        let worst = traj.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
        checks.push(CheckResult::at_most(
            "unitary_norm",
            worst,
            checks_cfg.unitary_norm_tol,
            "largest |norm - 1| along the trajectory".into(),
        ));
    } else {
        for ((detail, err), name) in analytic_decay_errors(checks_cfg.analytic_t_end, cfg.sde.master_dt)?
            .into_iter()
            .zip(["analytic_dephasing", "analytic_depolarizing", "analytic_amplitude"])
        {
            checks.push(CheckResult::at_most(
                name,
                err,
                checks_cfg.analytic_rel_tol,
                format!("{detail}, RK4 dt = {}, t <= {}", cfg.sde.master_dt, checks_cfg.analytic_t_end),
            ));
        }

        let n = cfg.sde.trajectories;
        let ens = simulate_ensemble(&psi0, &cfg.hamiltonian, &cfg.noise, &sde_cfg, n, cfg.sde.record_every)?;
        let rho0 = DensityMatrix::pure(&psi0)?;
        let master = integrate_master(&rho0, &cfg.hamiltonian, &cfg.noise, sde_cfg.t_end, cfg.sde.master_dt)?;
        let last = ens.times().len() - 1;
        let gap = trace_distance(&ens.density(last)?, master.final_state())?;
        let tol = checks_cfg
            .ensemble_trace_distance
            .unwrap_or(3.0 / (n as f64).sqrt());
        checks.push(CheckResult::at_most(
            "ensemble_vs_master",
            gap,
            tol,
            format!("trace distance at t = {}, N = {n}, dt = {}", sde_cfg.t_end, sde_cfg.dt),
        ));
        let mut csv = Vec::new();
        ens.write_summary_csv(&mut csv, Some(&master))?;
        summary_csv = Some(csv);

        let err = strong_error(
            checks_cfg.strong_gamma,
            sde_cfg.t_end,
            sde_cfg.dt,
            Integrator::EulerMaruyama,
            checks_cfg.strong_paths,
            cfg.seed_for(purpose::STRONG),
        )?;
        checks.push(CheckResult::at_most(
            "em_strong_error",
            err,
            checks_cfg.strong_error_tol,
            format!(
                "mean |psi_EM - psi_exact| at t = {}, dt = {}, dephasing gamma_p = {}, {} paths",
                sde_cfg.t_end, sde_cfg.dt, checks_cfg.strong_gamma, checks_cfg.strong_paths
            ),
        ));
    }

    let lip = sde.lipschitz_bounds();
    checks.push(CheckResult::at_most(
        "lipschitz_finite",
        if lip.is_finite() { 0.0 } else { 1.0 },
        0.0,
        "drift and diffusion Lipschitz bounds are finite".into(),
    ));
    let passed = checks.iter().all(|c| c.passed);
    Ok((
        OracleReport {
            schema: REPORT_SCHEMA.into(),
            run_id: cfg.run_id.clone(),
            config_digest: cfg.digest(),
            checks,
            lipschitz: LipschitzSummary {
                drift_operator_norm: lip.drift_norm,
                drift_finite_difference: lip.drift_fd,
                diffusion_operator_norms: lip.diffusion_norms,
                diffusion_finite_differences: lip.diffusion_fd,
                diffusion_time_derivative: lip.time_derivative,
            },
            passed,
        },
        summary_csv,
    ))
}

/// Runs the checks, writes `oracle_check.json` (and `ensemble_summary.csv`
/// when an ensemble was simulated) into `dir`, and fails with
/// [`Error::CheckFailed`] if any tolerance is violated.
pub fn cmd_oracle_check(cfg: &ExperimentConfig, dir: &Path) -> Result<OracleReport> {
    let start = Instant::now();
    let (report, csv) = run_oracle_checks(cfg)?;
    let digest = cfg.digest();
    io::write_json(&dir.join("oracle_check.json"), &report)?;
    if let Some(csv) = csv {
        io::atomic_write(&dir.join("ensemble_summary.csv"), &io::csv_with_digest(&digest, &csv))?;
    }
    io::record_timing(dir, "oracle_check_seconds", start.elapsed().as_secs_f64())?;
    if !report.passed {
        return Err(Error::CheckFailed(format!(
            "oracle checks failed: {}",
            report.failed_names().join(", ")
        )));
    }
    Ok(report)
}
