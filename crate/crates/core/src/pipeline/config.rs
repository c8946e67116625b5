// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration: a versioned JSON document with dotted-path
//! overrides, a content digest and derived seeds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lindblad::{Hamiltonian, NoiseModel, QubitNoise};
use crate::qstate::StateVector;
use crate::reverse::ReverseConfig;
use crate::rng::derive_seed;
use crate::score::{OuParams, Provenance, TrainConfig};
use crate::unravel::{Integrator, SdeConfig};

pub const SCHEMA: &str = "qdiff.experiment/1";

/// Forward-SDE and ensemble settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeSection {
    pub t_end: f64,
    pub dt: f64,
    pub integrator: Integrator,
    pub renormalize_each_step: bool,
    pub trajectories: usize,
    /// Keep every k-th grid point in exported trajectories.
    pub record_every: usize,
    /// Step of the RK4 master-equation reference.
    pub master_dt: f64,
}

impl Default for SdeSection {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: 1e-3,
            integrator: Integrator::EulerMaruyama,
            renormalize_each_step: false,
            trajectories: 10_000,
            record_every: 100,
            master_dt: 1e-3,
        }
    }
}

/// Tolerances of `oracle-check`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    /// Relative error bound of the analytic decay checks.
    pub analytic_rel_tol: f64,
    /// Horizon of the analytic decay checks.
    pub analytic_t_end: f64,
    /// Trace-distance bound for ensemble vs master equation; `None` uses
    /// `3/√N`.
    pub ensemble_trace_distance: Option<f64>,
    /// Dephasing rate of the Euler–Maruyama strong-error test equation.
    pub strong_gamma: f64,
    pub strong_paths: usize,
    pub strong_error_tol: f64,
    pub unitary_fidelity_tol: f64,
    pub unitary_norm_tol: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            analytic_rel_tol: 1e-6,
            analytic_t_end: 2.0,
            ensemble_trace_distance: None,
            strong_gamma: 0.5,
            strong_paths: 2000,
            strong_error_tol: 0.05,
            unitary_fidelity_tol: 1e-6,
            unitary_norm_tol: 1e-8,
        }
    }
}

/// What `make-dataset` produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub kind: Provenance,
    pub size: usize,
    pub held_out_fraction: f64,
    /// Fix the global phase of Haar states so the first amplitude is real
    /// and non-negative.
    pub canonical_phase: bool,
    /// Times at which clean states are also pushed through the forward
    /// quantum SDE and stored as corrupted copies.
    pub corruption_times: Vec<f64>,
    pub toy_dim: usize,
    pub toy_mean: f64,
    pub toy_variance: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            kind: Provenance::HaarStates,
            size: 1000,
            held_out_fraction: 0.2,
            canonical_phase: true,
            corruption_times: Vec::new(),
            toy_dim: 1,
            toy_mean: 0.0,
            toy_variance: 1.0,
        }
    }
}

/// `denoise-eval` settings beyond the reverse sampler itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// KDE bandwidth for `kde-oracle`; `None` selects Silverman's rule.
    pub kde_bandwidth: Option<f64>,
    /// Number of reverse paths exported to `reverse_paths.bin`.
    pub export_paths: usize,
    pub histogram_bins: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            kde_bandwidth: None,
            export_paths: 8,
            histogram_bins: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Aggregate runs even when their config digests differ.
    pub force: bool,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { force: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub run_id: String,
    /// Master seed; every other seed is derived from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub n_qubits: usize,
    pub hamiltonian: Hamiltonian<f64>,
    pub noise: NoiseModel<f64>,
    /// Initial state of the forward checks; `None` is the uniform
    /// superposition.
    pub initial_state: Option<StateVector<f64>>,
    pub sde: SdeSection,
    pub checks: CheckSection,
    pub ou: OuParams<f64>,
    pub train: TrainConfig<f64>,
    pub reverse: ReverseConfig<f64>,
    pub dataset: DatasetSection,
    pub eval: EvalSection,
    pub report: ReportSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA.into(),
            run_id: "run".into(),
            seed: 2026,
            out_dir: PathBuf::from("runs/default"),
            n_qubits: 1,
            hamiltonian: Hamiltonian::precession(1, 1.0).expect("valid default Hamiltonian"),
            noise: NoiseModel::single(QubitNoise::dephasing(0.5)).expect("valid default noise"),
            initial_state: None,
            sde: SdeSection::default(),
            checks: CheckSection::default(),
            ou: OuParams::default(),
            train: TrainConfig::default(),
            reverse: ReverseConfig::default(),
            dataset: DatasetSection::default(),
            eval: EvalSection::default(),
            report: ReportSection::default(),
        }
    }
}

/// Named purposes for [`ExperimentConfig::seed_for`].
pub mod purpose {
    pub const DATASET: &str = "dataset";
    pub const SPLIT: &str = "split";
    pub const FORWARD: &str = "forward-sde";
    pub const STRONG: &str = "strong-error";
    pub const TRAIN: &str = "train";
    pub const INIT: &str = "train-init";
    pub const CORRUPT: &str = "corrupt";
    pub const REVERSE: &str = "reverse";
}

fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key {key:?}")));
    }
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert((*part).to_string(), value);
                    return Ok(());
                }
                map.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: {part:?} is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("{key}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            Value::Null => {
                *node = Value::Object(Default::default());
                match node {
                    Value::Object(map) => {
                        if last {
                            map.insert((*part).to_string(), value);
                            return Ok(());
                        }
                        map.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()))
                    }
                    _ => unreachable!(),
                }
            }
            _ => return Err(Error::Config(format!("{key}: cannot descend into a scalar at {part:?}"))),
        };
    }
    Ok(())
}

/// Parses `key=value`; the value is read as JSON when possible and as a
/// plain string otherwise.
pub fn parse_override(spec: &str) -> Result<(String, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.trim().to_string(), value))
}

impl ExperimentConfig {
    /// Builds a config from JSON text plus `key=value` overrides.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut base = serde_json::to_value(Self::default())?;
        let user: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        if !user.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        merge(&mut base, user);
        for spec in overrides {
            let (key, value) = parse_override(spec)?;
            set_dotted(&mut base, &key, value)?;
        }
        let cfg: Self = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                self.schema
            )));
        }
        if self.run_id.is_empty() {
            return Err(Error::Config("run_id must not be empty".into()));
        }
        for (what, n) in [
            ("hamiltonian", self.hamiltonian.n_qubits()),
            ("noise", self.noise.n_qubits()),
        ] {
            if n != self.n_qubits {
                return Err(Error::Config(format!(
                    "{what} acts on {n} qubits but n_qubits = {}",
                    self.n_qubits
                )));
            }
        }
        if let Some(psi) = &self.initial_state {
            if psi.n_qubits() != self.n_qubits || !psi.is_normalized() {
                return Err(Error::Config("initial_state must be a normalized n_qubits state".into()));
            }
        }
        self.sde_config(0).validate()?;
        if self.sde.trajectories == 0 || self.sde.record_every == 0 {
            return Err(Error::Config("sde.trajectories and sde.record_every must be positive".into()));
        }
        if !(self.sde.master_dt > 0.0) {
            return Err(Error::Config("sde.master_dt must be positive".into()));
        }
        self.ou.validate()?;
        self.train.validate()?;
        self.reverse.validate()?;
        let ds = &self.dataset;
        if ds.size == 0 {
            return Err(Error::Config("dataset.size must be positive".into()));
        }
        if !(ds.held_out_fraction > 0.0 && ds.held_out_fraction < 1.0) {
            return Err(Error::Config("dataset.held_out_fraction must lie in (0, 1)".into()));
        }
        if ds.corruption_times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Config("dataset.corruption_times must be non-negative".into()));
        }
        if ds.kind == Provenance::ToyGaussian && (ds.toy_dim == 0 || !(ds.toy_variance > 0.0)) {
            return Err(Error::Config("toy data need toy_dim > 0 and toy_variance > 0".into()));
        }
        if ds.kind == Provenance::TrajectoryEndpoints && ds.corruption_times.is_empty() {
            return Err(Error::Config(
                "trajectory-endpoints datasets need at least one corruption time".into(),
            ));
        }
        if let Some(h) = self.eval.kde_bandwidth {
            if !(h >= 0.0) {
                return Err(Error::Config("eval.kde_bandwidth must be non-negative".into()));
            }
        }
        if self.eval.histogram_bins == 0 {
            return Err(Error::Config("eval.histogram_bins must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, excluding `run_id` and
    /// `out_dir`, as lowercase hex.
    pub fn digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("run_id");
            map.remove("out_dir");
        }
        let text = serde_json::to_string(&v).expect("value serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// `seed ⊕ first 8 bytes of SHA-256(purpose)`.
    pub fn seed_for(&self, purpose: &str) -> u64 {
        derive_seed(self.seed, purpose)
    }

    pub fn sde_config(&self, seed: u64) -> SdeConfig<f64> {
        SdeConfig {
            t_end: self.sde.t_end,
            dt: self.sde.dt,
            integrator: self.sde.integrator,
            seed,
            renormalize_each_step: self.sde.renormalize_each_step,
        }
    }

    pub fn train_config(&self) -> TrainConfig<f64> {
        TrainConfig {
            seed: self.seed_for(purpose::TRAIN),
            ..self.train.clone()
        }
    }

    pub fn reverse_config(&self) -> ReverseConfig<f64> {
        ReverseConfig {
            seed: self.seed_for(purpose::REVERSE),
            ..self.reverse.clone()
        }
    }

    pub fn initial_state(&self) -> Result<StateVector<f64>> {
        match &self.initial_state {
            Some(s) => Ok(s.clone()),
            None => {
                let dim = 1usize << self.n_qubits;
                StateVector::from_amplitudes(vec![crate::Complex::one(); dim])
            }
        }
    }

    /// Canonical pretty JSON of the resolved config.
    pub fn to_json_pretty(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }
}

/// Recursively overlays `patch` onto `base`; objects merge, everything else
/// replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json_with_overrides(r#"{"schema": "qdiff.experiment/1"}"#, &[]).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn overrides_reach_nested_leaves() {
        let cfg = ExperimentConfig::from_json_with_overrides(
            r#"{"schema": "qdiff.experiment/1"}"#,
            &[
                "sde.dt=0.2".into(),
                "train.optimizer=plain_sgd".into(),
                "noise.0.gamma_a=0.25".into(),
                "run_id=alpha".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.sde.dt, 0.2);
        assert_eq!(cfg.train.optimizer, crate::score::OptimizerKind::PlainSgd);
        assert_eq!(cfg.noise.qubit(0).gamma_a, 0.25);
        assert_eq!(cfg.run_id, "alpha");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            r#"{"schema": "other/1"}"#,
            r#"{"schema": "qdiff.experiment/1", "unknown": 1}"#,
            r#"{"schema": "qdiff.experiment/1", "sde": {"dt": 5.0}}"#,
            r#"{"schema": "qdiff.experiment/1", "n_qubits": 2}"#,
            r#"[1, 2]"#,
            "not json",
        ];
        for text in bad {
            assert!(ExperimentConfig::from_json_with_overrides(text, &[]).is_err(), "{text}");
        }
        assert!(ExperimentConfig::from_json_with_overrides("{}", &["sde".into()]).is_err());
    }

    #[test]
    fn digest_ignores_run_identity_but_not_content() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            run_id: "other".into(),
            out_dir: "elsewhere".into(),
            ..a.clone()
        };
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_ne!(a.digest(), c.digest());
        assert_ne!(a.seed_for(purpose::TRAIN), a.seed_for(purpose::REVERSE));
    }
}
